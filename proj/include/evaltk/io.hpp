#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "calibration.hpp"
#include "combination.hpp"
#include "core_space.hpp"
#include "datasplit.hpp"
#include "testing.hpp"

namespace evaltk {

using json = nlohmann::json;

/// File-level failures (missing file, unreadable content). Distinct from
/// the std::domain_error / std::invalid_argument family so the CLI can
/// map the two classes to different exit codes.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------
// extended reals: the string "inf" encodes +infinity in JSON

inline json encode_real(double v) {
  if (std::isinf(v)) return json("inf");
  return json(v);
}

inline double decode_real(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInfinity;
    throw IoError("bad numeric value '" + j.get<std::string>() + "' (expected number or \"inf\")");
  }
  if (!j.is_number()) throw IoError("expected a number");
  return j.get<double>();
}

inline json encode_real_list(const std::vector<double>& values) {
  json arr = json::array();
  for (double v : values) arr.push_back(encode_real(v));
  return arr;
}

inline std::vector<double> decode_real_list(const json& j) {
  if (!j.is_array()) throw IoError("expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& item : j) out.push_back(decode_real(item));
  return out;
}

// ---------------------------------------------------------------------
// domain types

inline json to_json(const FiniteSpace& space) {
  return json{{"outcomes", space.outcomes()}, {"probs", encode_real_list(space.probs())}};
}

inline FiniteSpace space_from_json(const json& j) {
  if (!j.is_object() || !j.contains("outcomes") || !j.contains("probs")) {
    throw IoError("space JSON must have 'outcomes' and 'probs'");
  }
  return FiniteSpace(j.at("outcomes").get<std::vector<std::string>>(),
                     decode_real_list(j.at("probs")));
}

inline json to_json(const RandomVariable& rv) {
  return json{{"values", encode_real_list(rv.values())}};
}

inline RandomVariable rv_from_json(const json& j) {
  if (!j.is_object() || !j.contains("values")) {
    throw IoError("random-variable JSON must have 'values'");
  }
  return RandomVariable(decode_real_list(j.at("values")));
}

inline json to_json(const HypothesisPair& pair) {
  return json{{"outcomes", pair.outcomes()},
              {"null", encode_real_list(pair.null_space().probs())},
              {"alt", encode_real_list(pair.alt_space().probs())}};
}

inline HypothesisPair pair_from_json(const json& j) {
  if (!j.is_object() || !j.contains("outcomes") || !j.contains("null") || !j.contains("alt")) {
    throw IoError("pair JSON must have 'outcomes', 'null' and 'alt'");
  }
  return HypothesisPair(j.at("outcomes").get<std::vector<std::string>>(),
                        decode_real_list(j.at("null")), decode_real_list(j.at("alt")));
}

inline json to_json(const BernoulliDataset& data) {
  return json{{"bits", data.bits()}};
}

inline BernoulliDataset dataset_from_json(const json& j) {
  if (!j.is_object() || !j.contains("bits")) {
    throw IoError("dataset JSON must have 'bits'");
  }
  return BernoulliDataset(j.at("bits").get<std::vector<int>>());
}

/// Plain-text dataset format: one 0/1 character per line.
inline BernoulliDataset dataset_from_text(const std::string& text) {
  std::vector<int> bits;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    if (start == line.size()) continue;
    if (line.size() - start != 1 || (line[start] != '0' && line[start] != '1')) {
      throw IoError("dataset line " + std::to_string(line_no) + ": expected a single 0 or 1");
    }
    bits.push_back(line[start] - '0');
  }
  return BernoulliDataset(std::move(bits));
}

// ---------------------------------------------------------------------
// reports

inline json to_json(const CalibratorReport& r) {
  return json{{"monotone", r.monotone}, {"integral", encode_real(r.integral)},
              {"evar_check", r.evar_check}};
}

inline json to_json(const RoundTripResult& r) {
  return json{{"p_in", r.p_in}, {"e_mid", encode_real(r.e_mid)}, {"p_out", r.p_out}};
}

inline json to_json(const JeffreysRow& row) {
  return json{{"p", row.p},
              {"jeffreys_e", row.jeffreys_e},
              {"shafer_e", row.shafer_e},
              {"flag", std::string(row.flag())}};
}

inline json to_json(const LogOptimalityReport& r) {
  return json{{"n_trials", r.n_trials},
              {"kl", r.kl},
              {"max_excess", encode_real(r.max_excess)},
              {"violations", r.violations},
              {"pass", r.pass()}};
}

inline json to_json(const UniformityReport& r) {
  json achieved = json::array();
  for (const auto& [value, cdf] : r.achieved_cdf) {
    achieved.push_back(json{{"value", encode_real(value)}, {"cdf", cdf}});
  }
  return json{{"achieved", achieved},
              {"max_gap", r.max_gap},
              {"superuniform", r.superuniform},
              {"exact_uniform", r.exact_uniform},
              {"bin_cdf", encode_real_list(r.bin_cdf)}};
}

inline json to_json(const CounterexampleCertificate& cert) {
  json p_vars = json::array();
  for (const RandomVariable& p : cert.p_vars) p_vars.push_back(to_json(p));
  return json{{"space", to_json(cert.space)},
              {"p_vars", p_vars},
              {"threshold", cert.threshold},
              {"violation", cert.violation}};
}

inline json to_json(const CombineReport& r) {
  json j{{"e_mean", encode_real_list(r.e_mean.values())},
         {"e_mean_valid", r.e_mean_valid},
         {"e_mean_p", encode_real_list(r.e_mean_p.values())}};
  if (r.p_violation) j["p_violation"] = *r.p_violation;
  return j;
}

inline json to_json(const MartingaleTrace& trace) {
  return json{{"factors", encode_real_list(trace.factors)},
              {"wealth", encode_real_list(trace.wealth)}};
}

inline json to_json(const SplitReport& r) {
  json rows = json::array();
  for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
    rows.push_back(json{{"seed", r.per_seed[i].first},
                        {"e_value", encode_real(r.per_seed[i].second)},
                        {"p_value", r.p_per_seed[i]}});
  }
  return json{{"per_seed", rows},
              {"derandomized_e", encode_real(r.derandomized_e)},
              {"e_spread", r.e_spread ? json(*r.e_spread) : json(nullptr)},
              {"p_spread", r.p_spread ? json(*r.p_spread) : json(nullptr)},
              {"exhaustive", r.exhaustive}};
}

inline json to_json(const ReproducibilityReport& r) {
  json batches = json::array();
  for (const auto& [size, spread] : r.batch_spreads) {
    batches.push_back(json{{"batch_size", size},
                           {"spread", spread ? json(*spread) : json(nullptr)}});
  }
  return json{{"n_seeds", r.n_seeds},
              {"exhaustive", r.exhaustive},
              {"degenerate", r.degenerate},
              {"e_spread", r.e_spread ? json(*r.e_spread) : json(nullptr)},
              {"p_spread", r.p_spread ? json(*r.p_spread) : json(nullptr)},
              {"batch_spreads", batches},
              {"derandomized_spread",
               r.derandomized_spread ? json(*r.derandomized_spread) : json(nullptr)}};
}

// ---------------------------------------------------------------------
// CSV

/// Formats with the given number of significant digits; infinities print
/// as "inf" to match the JSON encoding.
inline std::string format_real(double v, int precision = 6) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

/// Columns: round,factor,wealth. Round 0 is the initial unit wealth and
/// has no factor.
inline std::string trace_to_csv(const MartingaleTrace& trace, int precision = 6) {
  std::string out = "round,factor,wealth\n";
  out += "0,," + format_real(trace.wealth[0], precision) + "\n";
  for (std::size_t i = 0; i < trace.factors.size(); ++i) {
    out += std::to_string(i + 1) + "," + format_real(trace.factors[i], precision) + "," +
           format_real(trace.wealth[i + 1], precision) + "\n";
  }
  return out;
}

/// Columns: seed,e_value,p_value (seed is the split rank in exhaustive mode).
inline std::string split_report_to_csv(const SplitReport& report, int precision = 6) {
  std::string out = "seed,e_value,p_value\n";
  for (std::size_t i = 0; i < report.per_seed.size(); ++i) {
    out += std::to_string(report.per_seed[i].first) + "," +
           format_real(report.per_seed[i].second, precision) + "," +
           format_real(report.p_per_seed[i], precision) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------
// files

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read file: " + path);
  return buf.str();
}

inline json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw IoError("bad JSON in " + path + ": " + e.what());
  }
}

inline FiniteSpace load_space(const std::string& path) {
  return space_from_json(parse_json_file(path));
}

inline RandomVariable load_rv(const std::string& path) {
  return rv_from_json(parse_json_file(path));
}

inline HypothesisPair load_pair(const std::string& path) {
  return pair_from_json(parse_json_file(path));
}

/// Dataset files may be JSON ({"bits": [...]}) or one 0/1 per line; the
/// format is detected from the first non-space byte.
inline BernoulliDataset load_dataset(const std::string& path) {
  const std::string text = read_text_file(path);
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') {
      try {
        return dataset_from_json(json::parse(text));
      } catch (const json::parse_error& e) {
        throw IoError("bad JSON in " + path + ": " + e.what());
      }
    }
    break;
  }
  return dataset_from_text(text);
}

}  // namespace evaltk
