// evaltk: command-line surface for the e-value / p-value toolkit.
//
// Every command prints a JSON payload carrying the tool version and the
// full resolved parameter set next to the result, so a run can be
// reproduced from its own output. Commands with randomized paths require
// --seed and are bit-reproducible for a fixed seed.
//
// Exit codes: 0 ok, 2 domain error (bad arguments or parameters),
// 3 io error (unreadable or malformed files).

#include <CLI11.hpp>

#include <evaltk/evaltk.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using evaltk::json;

constexpr int kExitOk = 0;
constexpr int kExitDomainError = 2;
constexpr int kExitIoError = 3;

struct OutputOptions {
  std::string format = "json";
  int precision = 6;
  std::string output_path;  // empty: stdout
};

double round_sig(double v, int digits) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  const int exponent = static_cast<int>(std::floor(std::log10(std::abs(v))));
  const double mag = std::pow(10.0, digits - 1 - exponent);
  return std::round(v * mag) / mag;
}

// Rounds every float in the result tree to the display precision.
// Integers (seeds, counts, ranks) pass through untouched.
void round_numbers(json& j, int digits) {
  if (j.is_number_float()) {
    j = round_sig(j.get<double>(), digits);
  } else if (j.is_array() || j.is_object()) {
    for (json& item : j) round_numbers(item, digits);
  }
}

double default_tolerance_from_env() {
  const char* raw = std::getenv("EVALTK_TOL");
  if (raw == nullptr || *raw == '\0') return evaltk::kDefaultTolerance;
  char* end = nullptr;
  const double tol = std::strtod(raw, &end);
  if (end == raw || *end != '\0' || !(tol >= 0.0)) {
    throw std::domain_error("EVALTK_TOL must be a nonnegative number");
  }
  return tol;
}

void emit(const OutputOptions& opts, const std::string& command, const json& params,
          json result, const std::string& csv = "") {
  round_numbers(result, opts.precision);
  json payload{{"version", std::string(evaltk::kVersion)},
               {"command", command},
               {"params", params},
               {"result", result}};
  std::string text;
  if (opts.format == "csv" && !csv.empty()) {
    text = csv;
  } else if (opts.format == "csv") {
    // generic key,value flattening of the (rounded) result object
    text = "key,value\n";
    for (const auto& [key, value] : result.items()) {
      if (value.is_primitive()) {
        text += key + "," + (value.is_string() ? value.get<std::string>() : value.dump()) + "\n";
      }
    }
  } else {
    text = payload.dump(2) + "\n";
  }
  if (opts.output_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(opts.output_path, std::ios::binary);
    if (!out) throw evaltk::IoError("cannot open output file: " + opts.output_path);
    out << text;
    if (!out) throw evaltk::IoError("cannot write output file: " + opts.output_path);
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split_list(text)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::logic_error&) {
      throw std::domain_error("bad number in list: '" + item + "'");
    }
    if (used != item.size()) throw std::domain_error("bad number in list: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------
// command handlers

void run_calibrate(const OutputOptions& opts, const std::string& cal_spec, double p) {
  const evaltk::Calibrator cal = evaltk::Calibrator::parse(cal_spec);
  const double e = cal(p);
  emit(opts, "calibrate", json{{"cal", cal_spec}, {"p", p}},
       json{{"e", evaltk::encode_real(e)}});
}

void run_e2p(const OutputOptions& opts, double e, double floor) {
  emit(opts, "e2p", json{{"e", evaltk::encode_real(e)}, {"floor", floor}},
       json{{"p", evaltk::e_to_p(e, floor)}});
}

void run_roundtrip(const OutputOptions& opts, const std::string& cal_spec, double p) {
  const evaltk::RoundTripResult r = evaltk::round_trip(p, evaltk::Calibrator::parse(cal_spec));
  emit(opts, "roundtrip", json{{"cal", cal_spec}, {"p", p}},
       json{{"p_in", r.p_in}, {"e", evaltk::encode_real(r.e_mid)}, {"p_out", r.p_out}});
}

void run_jeffreys(const OutputOptions& opts) {
  json rows = json::array();
  std::string csv = "p,jeffreys_e,shafer_e,flag\n";
  for (const evaltk::JeffreysRow& row : evaltk::jeffreys_table()) {
    rows.push_back(evaltk::to_json(row));
    csv += evaltk::format_real(row.p, opts.precision) + "," +
           evaltk::format_real(row.jeffreys_e, opts.precision) + "," +
           evaltk::format_real(row.shafer_e, opts.precision) + "," + std::string(row.flag()) +
           "\n";
  }
  emit(opts, "jeffreys", json::object(), json{{"rows", rows}}, csv);
}

void run_validate(const OutputOptions& opts, const std::string& kind,
                  const std::string& space_path, const std::string& rv_path,
                  const std::string& cal_spec, std::size_t grid) {
  const double tol = default_tolerance_from_env();
  if (kind == "calibrator") {
    if (cal_spec.empty()) throw std::domain_error("validate --kind calibrator needs --cal");
    const evaltk::CalibratorReport report =
        evaltk::validate_calibrator(evaltk::Calibrator::parse(cal_spec), grid, tol);
    json result = evaltk::to_json(report);
    result["valid"] = report.pass(tol);
    emit(opts, "validate",
         json{{"kind", kind}, {"cal", cal_spec}, {"grid", grid}, {"tol", tol}}, result);
    return;
  }
  if (space_path.empty() || rv_path.empty()) {
    throw std::domain_error("validate --kind " + kind + " needs --space and --rv");
  }
  const evaltk::FiniteSpace space = evaltk::load_space(space_path);
  const evaltk::RandomVariable rv = evaltk::load_rv(rv_path);
  json params{{"kind", kind}, {"space", space_path}, {"rv", rv_path}, {"tol", tol}};
  if (kind == "e") {
    const double mean = evaltk::expectation(space, rv);
    emit(opts, "validate", params,
         json{{"valid", evaltk::is_e_variable(space, rv, tol)},
              {"expectation", evaltk::encode_real(mean)}});
  } else if (kind == "p") {
    const evaltk::UniformityReport u = evaltk::p_uniformity_check(space, rv, 20, tol);
    emit(opts, "validate", params,
         json{{"valid", evaltk::is_p_variable(space, rv, tol)}, {"max_gap", u.max_gap}});
  } else {
    throw std::domain_error("validate: --kind must be p, e or calibrator");
  }
}

void run_lrtest(const OutputOptions& opts, const std::string& pair_path, int optimality_trials,
                bool check_uniformity, int bins, const std::optional<std::uint64_t>& seed) {
  const double tol = default_tolerance_from_env();
  const evaltk::HypothesisPair pair = evaltk::load_pair(pair_path);
  const evaltk::RandomVariable lr = evaltk::likelihood_ratio_e(pair);
  const evaltk::RandomVariable np = evaltk::np_p_variable(pair);

  json params{{"pair", pair_path}, {"tol", tol}};
  json result{{"outcomes", pair.outcomes()},
              {"e", evaltk::encode_real_list(lr.values())},
              {"p", evaltk::encode_real_list(np.values())},
              {"e_expectation", evaltk::encode_real(evaltk::expectation(pair.null_space(), lr))}};

  if (optimality_trials > 0) {
    if (!seed) throw std::domain_error("lrtest --check-optimality needs --seed");
    params["check_optimality"] = optimality_trials;
    params["seed"] = *seed;
    result["log_optimality"] =
        evaltk::to_json(evaltk::log_optimality_check(pair, optimality_trials, *seed, tol));
  }
  if (check_uniformity) {
    params["check_uniformity"] = true;
    params["bins"] = bins;
    result["uniformity"] = evaltk::to_json(evaltk::p_uniformity_check(pair, bins, tol));
  }

  std::string csv = "outcome,e,p\n";
  for (std::size_t i = 0; i < pair.size(); ++i) {
    csv += pair.outcomes()[i] + "," + evaltk::format_real(lr[i], opts.precision) + "," +
           evaltk::format_real(np[i], opts.precision) + "\n";
  }
  emit(opts, "lrtest", params, result, csv);
}

void run_combine(const OutputOptions& opts, bool demo_counterexample, std::size_t grid,
                 const std::string& space_path, const std::string& evar_list,
                 const std::string& pvar_list, const std::string& factors_text) {
  const double tol = default_tolerance_from_env();
  const int modes = static_cast<int>(demo_counterexample) +
                    static_cast<int>(!evar_list.empty()) +
                    static_cast<int>(!factors_text.empty());
  if (modes != 1) {
    throw std::domain_error(
        "combine: choose exactly one of --demo-p-counterexample, --evars, --factors");
  }

  if (demo_counterexample) {
    const evaltk::CounterexampleCertificate cert = evaltk::p_average_counterexample(grid);
    json result = evaltk::to_json(cert);
    result["verified"] = evaltk::verify_certificate(cert);
    emit(opts, "combine", json{{"demo_p_counterexample", true}, {"grid", grid}}, result);
    return;
  }

  if (!factors_text.empty()) {
    const std::vector<double> factors = parse_double_list(factors_text);
    const evaltk::MartingaleTrace trace = evaltk::sequential_product(factors);
    emit(opts, "combine", json{{"factors", evaltk::encode_real_list(factors)}},
         evaltk::to_json(trace), evaltk::trace_to_csv(trace, opts.precision));
    return;
  }

  if (space_path.empty()) throw std::domain_error("combine --evars needs --space");
  const evaltk::FiniteSpace space = evaltk::load_space(space_path);
  std::vector<evaltk::RandomVariable> evars;
  for (const std::string& path : split_list(evar_list)) {
    evars.push_back(evaltk::load_rv(path));
  }
  std::vector<evaltk::RandomVariable> pvars;
  for (const std::string& path : split_list(pvar_list)) {
    pvars.push_back(evaltk::load_rv(path));
  }
  const evaltk::CombineReport report = evaltk::combine_report(space, evars, pvars, tol);
  emit(opts, "combine",
       json{{"space", space_path}, {"evars", split_list(evar_list)},
            {"pvars", split_list(pvar_list)}, {"tol", tol}},
       evaltk::to_json(report));
}

void run_splitsim(const OutputOptions& opts, const std::string& data_path,
                  const std::string& mode, std::size_t n_seeds, double theta0, double smoothing,
                  double train_fraction, unsigned threads, const std::string& repro_batches,
                  const std::optional<std::uint64_t>& seed) {
  const evaltk::BernoulliDataset data = evaltk::load_dataset(data_path);
  const evaltk::SplitParams params{theta0, smoothing, train_fraction};

  json param_json{{"data", data_path},       {"mode", mode},
                  {"theta0", theta0},        {"smoothing", smoothing},
                  {"train_fraction", train_fraction}, {"threads", threads}};

  evaltk::SplitReport report;
  json result;
  if (mode == "exhaustive") {
    report = evaltk::derandomized_e_exhaustive(data, params, threads);
    result = evaltk::to_json(report);
    if (!repro_batches.empty()) {
      // batch sizes do not apply when every split is enumerated
      result["reproducibility"] =
          evaltk::to_json(evaltk::reproducibility_report_exhaustive(data, params, threads));
    }
  } else if (mode == "seeds") {
    if (!seed) throw std::domain_error("splitsim --mode seeds needs --seed");
    if (n_seeds < 1) throw std::domain_error("splitsim --mode seeds needs --n-seeds >= 1");
    param_json["seed"] = *seed;
    param_json["n_seeds"] = n_seeds;
    evaltk::SplitMix64 seeder(*seed);
    std::vector<std::uint64_t> seeds(n_seeds);
    for (std::uint64_t& s : seeds) s = seeder.next_u64();
    report = evaltk::derandomized_e(data, seeds, params, threads);
    result = evaltk::to_json(report);
    if (!repro_batches.empty()) {
      std::vector<std::size_t> batch_sizes;
      for (double b : parse_double_list(repro_batches)) {
        if (b < 1.0 || b != std::floor(b)) {
          throw std::domain_error("splitsim: batch sizes must be positive integers");
        }
        batch_sizes.push_back(static_cast<std::size_t>(b));
      }
      param_json["repro_batches"] = batch_sizes;
      result["reproducibility"] = evaltk::to_json(
          evaltk::reproducibility_report(data, n_seeds, params, batch_sizes, *seed, threads));
    }
  } else {
    throw std::domain_error("splitsim: --mode must be exhaustive or seeds");
  }
  emit(opts, "splitsim", param_json, result, evaltk::split_report_to_csv(report, opts.precision));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"e-value / p-value toolkit: calibration, validity checks, combination rules "
               "and the derandomized data-splitting test"};
  app.require_subcommand(1);

  OutputOptions opts;
  std::optional<std::uint64_t> seed;
  app.add_option("--format", opts.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--precision", opts.precision, "Significant digits for printed numbers")
      ->check(CLI::Range(1, 17));
  app.add_option("--output", opts.output_path, "Write output to a file instead of stdout");
  app.add_option("--seed", seed, "Seed for randomized paths (SplitMix64 stream)");

  // calibrate
  auto* cmd_calibrate = app.add_subcommand("calibrate", "Map a p-value to an e-value");
  std::string cal_spec = "shafer";
  double p_value = 0.0;
  cmd_calibrate->add_option("--cal", cal_spec, "Calibrator spec: shafer or power:<kappa>");
  cmd_calibrate->add_option("--p", p_value, "p-value in (0, 1]")->required();
  cmd_calibrate->fallthrough();

  // e2p
  auto* cmd_e2p = app.add_subcommand("e2p", "Map an e-value to a p-value");
  double e_value = 0.0;
  double e2p_floor = 0.0;
  cmd_e2p->add_option("--e", e_value, "e-value (nonnegative)")->required();
  cmd_e2p->add_option("--floor", e2p_floor, "Lower clamp for the resulting p-value");
  cmd_e2p->fallthrough();

  // roundtrip
  auto* cmd_roundtrip = app.add_subcommand("roundtrip", "p -> e -> p round trip");
  std::string rt_cal = "shafer";
  double rt_p = 0.0;
  cmd_roundtrip->add_option("--cal", rt_cal, "Calibrator spec");
  cmd_roundtrip->add_option("--p", rt_p, "p-value in (0, 1]")->required();
  cmd_roundtrip->fallthrough();

  // jeffreys
  auto* cmd_jeffreys =
      app.add_subcommand("jeffreys", "Jeffreys's rule of thumb vs Shafer's calibrator");
  cmd_jeffreys->fallthrough();

  // validate
  auto* cmd_validate = app.add_subcommand("validate", "Check p/e-variable or calibrator validity");
  std::string val_kind;
  std::string val_space, val_rv, val_cal;
  std::size_t val_grid = 1000;
  cmd_validate->add_option("--kind", val_kind, "p, e or calibrator")->required();
  cmd_validate->add_option("--space", val_space, "FiniteSpace JSON file");
  cmd_validate->add_option("--rv", val_rv, "RandomVariable JSON file");
  cmd_validate->add_option("--cal", val_cal, "Calibrator spec (for --kind calibrator)");
  cmd_validate->add_option("--grid", val_grid, "Grid size for the calibrator checks");
  cmd_validate->fallthrough();

  // lrtest
  auto* cmd_lrtest = app.add_subcommand("lrtest", "Likelihood-ratio e-variable and NP p-variable");
  std::string lr_pair;
  int lr_opt_trials = 0;
  bool lr_uniformity = false;
  int lr_bins = 20;
  cmd_lrtest->add_option("--pair", lr_pair, "HypothesisPair JSON file")->required();
  cmd_lrtest->add_option("--check-optimality", lr_opt_trials,
                         "Run the log-optimality check with this many trials");
  cmd_lrtest->add_flag("--check-uniformity", lr_uniformity, "Run the p-uniformity check");
  cmd_lrtest->add_option("--bins", lr_bins, "CDF grid for the uniformity report");
  cmd_lrtest->fallthrough();

  // combine
  auto* cmd_combine = app.add_subcommand("combine", "e-value averaging, martingale products, "
                                                    "and the p-averaging counterexample");
  bool demo_counterexample = false;
  std::size_t combine_grid = 100;
  std::string combine_space, combine_evars, combine_pvars, combine_factors;
  cmd_combine->add_flag("--demo-p-counterexample", demo_counterexample,
                        "Construct the antithetic p-averaging counterexample");
  cmd_combine->add_option("--grid", combine_grid, "Grid size for the counterexample");
  cmd_combine->add_option("--space", combine_space, "FiniteSpace JSON file");
  cmd_combine->add_option("--evars", combine_evars, "Comma-separated e-variable JSON files");
  cmd_combine->add_option("--pvars", combine_pvars, "Comma-separated p-variable JSON files");
  cmd_combine->add_option("--factors", combine_factors,
                          "Comma-separated e-values for a sequential product");
  cmd_combine->fallthrough();

  // splitsim
  auto* cmd_splitsim = app.add_subcommand("splitsim", "Data-splitting test with e-values");
  std::string split_data, split_mode = "exhaustive", split_batches;
  std::size_t split_n_seeds = 0;
  double split_theta0 = 0.5, split_smoothing = 1.0, split_fraction = 0.5;
  unsigned split_threads = 1;
  cmd_splitsim->add_option("--data", split_data, "Dataset file (0/1 lines or JSON bits)")
      ->required();
  cmd_splitsim->add_option("--mode", split_mode, "exhaustive or seeds");
  cmd_splitsim->add_option("--n-seeds", split_n_seeds, "Number of random splits in seeds mode");
  cmd_splitsim->add_option("--theta0", split_theta0, "Null Bernoulli rate");
  cmd_splitsim->add_option("--smoothing", split_smoothing, "Laplace smoothing for theta-hat");
  cmd_splitsim->add_option("--train-fraction", split_fraction, "Fraction of data to train on");
  cmd_splitsim->add_option("--threads", split_threads, "Worker threads (result is unaffected)");
  cmd_splitsim->add_option("--repro-batches", split_batches,
                           "Comma-separated batch sizes for the reproducibility report");
  cmd_splitsim->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitDomainError;
  }

  try {
    if (cmd_calibrate->parsed()) {
      run_calibrate(opts, cal_spec, p_value);
    } else if (cmd_e2p->parsed()) {
      run_e2p(opts, e_value, e2p_floor);
    } else if (cmd_roundtrip->parsed()) {
      run_roundtrip(opts, rt_cal, rt_p);
    } else if (cmd_jeffreys->parsed()) {
      run_jeffreys(opts);
    } else if (cmd_validate->parsed()) {
      run_validate(opts, val_kind, val_space, val_rv, val_cal, val_grid);
    } else if (cmd_lrtest->parsed()) {
      run_lrtest(opts, lr_pair, lr_opt_trials, lr_uniformity, lr_bins, seed);
    } else if (cmd_combine->parsed()) {
      run_combine(opts, demo_counterexample, combine_grid, combine_space, combine_evars,
                  combine_pvars, combine_factors);
    } else if (cmd_splitsim->parsed()) {
      run_splitsim(opts, split_data, split_mode, split_n_seeds, split_theta0, split_smoothing,
                   split_fraction, split_threads, split_batches, seed);
    }
  } catch (const evaltk::IoError& e) {
    std::cerr << json{{"version", std::string(evaltk::kVersion)},
                      {"status", "io_error"},
                      {"error", e.what()}}
                     .dump(2)
              << "\n";
    return kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << json{{"version", std::string(evaltk::kVersion)},
                      {"status", "domain_error"},
                      {"error", e.what()}}
                     .dump(2)
              << "\n";
    return kExitDomainError;
  }
  return kExitOk;
}
