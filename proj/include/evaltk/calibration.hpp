#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "core_space.hpp"

namespace evaltk {

/// Shafer's p-to-e calibrator S(p) = 1/sqrt(p) - 1 on (0, 1].
/// Nonincreasing with unit integral, so composing it with any p-variable
/// yields an e-variable.
inline double shafer_calibrate(double p) {
  if (!(p > 0.0) || p > 1.0) {
    throw std::domain_error("shafer_calibrate: p must lie in (0, 1]");
  }
  return 1.0 / std::sqrt(p) - 1.0;
}

/// Power-family calibrator kappa * p^(kappa - 1) for kappa in (0, 1).
/// Integrates to exactly 1 over (0, 1] for every kappa.
inline double power_calibrate(double kappa, double p) {
  if (!(kappa > 0.0) || kappa >= 1.0) {
    throw std::domain_error("power_calibrate: kappa must lie in (0, 1)");
  }
  if (!(p > 0.0) || p > 1.0) {
    throw std::domain_error("power_calibrate: p must lie in (0, 1]");
  }
  return kappa * std::pow(p, kappa - 1.0);
}

/// The admissible e-to-p map e -> min(1, 1/e). It dominates every other
/// e-to-p transform, so it is the only one provided. e = 0 maps to 1;
/// e = +inf maps to the floor (default 0, the one input reported as an
/// exact zero). Finite e always produces a strictly positive result.
inline double e_to_p(double e, double floor = 0.0) {
  if (std::isnan(e) || e < 0.0) {
    throw std::domain_error("e_to_p: e must be nonnegative");
  }
  if (floor < 0.0 || floor > 1.0) {
    throw std::domain_error("e_to_p: floor must lie in [0, 1]");
  }
  if (e == 0.0) return 1.0;
  return std::max(floor, std::min(1.0, 1.0 / e));
}

/// A p-to-e calibrator: Shafer's rule or a member of the power family.
class Calibrator {
 public:
  enum class Kind { Shafer, Power };

  static Calibrator shafer() { return Calibrator(Kind::Shafer, 0.0); }

  static Calibrator power(double kappa) {
    if (!(kappa > 0.0) || kappa >= 1.0) {
      throw std::domain_error("Calibrator::power: kappa must lie in (0, 1)");
    }
    return Calibrator(Kind::Power, kappa);
  }

  /// Parses the CLI spec string: "shafer" or "power:<kappa>".
  static Calibrator parse(std::string_view spec) {
    if (spec == "shafer") return shafer();
    constexpr std::string_view prefix = "power:";
    if (spec.substr(0, prefix.size()) == prefix) {
      const std::string arg(spec.substr(prefix.size()));
      try {
        std::size_t used = 0;
        const double kappa = std::stod(arg, &used);
        if (used == arg.size()) return power(kappa);
      } catch (const std::logic_error&) {
        // fall through to the domain error below
      }
    }
    throw std::domain_error("Calibrator::parse: bad spec '" + std::string(spec) +
                            "' (expected 'shafer' or 'power:<kappa>')");
  }

  double operator()(double p) const {
    return kind_ == Kind::Shafer ? shafer_calibrate(p) : power_calibrate(kappa_, p);
  }

  Kind kind() const { return kind_; }
  double kappa() const { return kappa_; }

  /// Both built-in families integrate to exactly 1 over (0, 1].
  double analytic_integral() const { return 1.0; }

  std::string spec() const {
    if (kind_ == Kind::Shafer) return "shafer";
    return "power:" + std::to_string(kappa_);
  }

 private:
  Calibrator(Kind kind, double kappa) : kind_(kind), kappa_(kappa) {}

  Kind kind_;
  double kappa_;
};

/// p -> e -> p. Round trips lose evidence: p_out >= p_in for every
/// admissible calibrator.
struct RoundTripResult {
  double p_in;
  double e_mid;
  double p_out;
};

inline RoundTripResult round_trip(double p, const Calibrator& cal) {
  const double e = cal(p);
  return RoundTripResult{p, e, e_to_p(e)};
}

/// One row of the Jeffreys comparison: the rule-of-thumb betting score
/// for a benchmark p-value next to Shafer's calibrated value.
struct JeffreysRow {
  double p;
  double jeffreys_e;
  double shafer_e;
  bool overshoot;  // Shafer's value exceeds Jeffreys's

  std::string_view flag() const { return overshoot ? "overshoot" : "undershoot"; }
};

/// Jeffreys's rule of thumb (p = 5% ~ score 10^(1/2), p = 1% ~ score 10)
/// against Shafer's calibrator: a slight overshoot at 5% and a slight
/// undershoot at 1%.
inline std::array<JeffreysRow, 2> jeffreys_table() {
  std::array<JeffreysRow, 2> rows{{
      {0.05, std::sqrt(10.0), shafer_calibrate(0.05), false},
      {0.01, 10.0, shafer_calibrate(0.01), false},
  }};
  for (JeffreysRow& row : rows) row.overshoot = row.shafer_e > row.jeffreys_e;
  return rows;
}

/// Admissibility report for a p-to-e transform: nonincreasing on the
/// grid, unit-or-less integral, and the composed grid p-variable is an
/// e-variable on the uniform space.
struct CalibratorReport {
  bool monotone = false;
  double integral = 0.0;
  bool evar_check = false;

  bool pass(double tol = kDefaultTolerance) const {
    return monotone && integral <= 1.0 + tol && evar_check;
  }
};

/// Number of panels for the numeric integral check. The built-in
/// families are handled analytically; this only drives the generic path.
inline constexpr std::size_t kCalibratorIntegrationPanels = 100000;

/// Validates an arbitrary p-to-e transform f on (0, 1]:
///  (a) f is nonincreasing on the grid {i/grid_size : i = 1..grid_size},
///  (b) integral of f over (0, 1] is <= 1 + tol (composite midpoint rule;
///      both built-in integrands are improper at 0 and midpoint never
///      evaluates there),
///  (c) f composed with the grid p-variable on the uniform grid_size-space
///      has expectation <= 1 + tol.
/// Failures are reported, not thrown. An analytic integral, when known,
/// overrides the midpoint value.
inline CalibratorReport validate_calibrator(const std::function<double(double)>& f,
                                            std::size_t grid_size,
                                            double tol = kDefaultTolerance,
                                            std::size_t panels = kCalibratorIntegrationPanels,
                                            std::optional<double> analytic_integral = std::nullopt) {
  if (grid_size < 2) throw std::invalid_argument("validate_calibrator: grid_size must be >= 2");
  if (panels < 1) throw std::invalid_argument("validate_calibrator: panels must be >= 1");
  CalibratorReport report;

  report.monotone = true;
  double prev = kInfinity;
  for (std::size_t i = 1; i <= grid_size; ++i) {
    const double value = f(static_cast<double>(i) / static_cast<double>(grid_size));
    if (value > prev) {
      report.monotone = false;
      break;
    }
    prev = value;
  }

  if (analytic_integral) {
    report.integral = *analytic_integral;
  } else {
    double sum = 0.0;
    const double width = 1.0 / static_cast<double>(panels);
    for (std::size_t j = 0; j < panels; ++j) {
      sum += f((static_cast<double>(j) + 0.5) * width);
    }
    report.integral = sum * width;
  }

  const FiniteSpace space = uniform_space(grid_size);
  const RandomVariable grid = grid_p_variable(grid_size);
  std::vector<double> composed(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) composed[i] = f(grid[i]);
  report.evar_check = is_e_variable(space, RandomVariable(std::move(composed)), tol);

  return report;
}

inline CalibratorReport validate_calibrator(const Calibrator& cal, std::size_t grid_size,
                                            double tol = kDefaultTolerance,
                                            std::size_t panels = kCalibratorIntegrationPanels) {
  return validate_calibrator([&cal](double p) { return cal(p); }, grid_size, tol, panels,
                             cal.analytic_integral());
}

/// Pointwise composition of a calibrator with a p-variable. p-values that
/// exceed 1 (a valid p-variable may take them) are treated as 1. The
/// result is an e-variable whenever the input is a p-variable.
inline RandomVariable apply_calibrator(const Calibrator& cal, const RandomVariable& p_rv) {
  std::vector<double> out(p_rv.size());
  for (std::size_t i = 0; i < p_rv.size(); ++i) {
    const double p = std::min(p_rv[i], 1.0);
    if (!(p > 0.0)) {
      throw std::domain_error("apply_calibrator: p-values must be strictly positive");
    }
    out[i] = cal(p);
  }
  return RandomVariable(std::move(out));
}

/// Pointwise e -> min(1, 1/e). The result is a p-variable whenever the
/// input is an e-variable (Markov's inequality).
inline RandomVariable apply_e_to_p(const RandomVariable& e_rv, double floor = 0.0) {
  std::vector<double> out(e_rv.size());
  for (std::size_t i = 0; i < e_rv.size(); ++i) out[i] = e_to_p(e_rv[i], floor);
  return RandomVariable(std::move(out));
}

}  // namespace evaltk
