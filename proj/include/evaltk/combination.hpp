#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "calibration.hpp"
#include "core_space.hpp"

namespace evaltk {

/// Wealth process of sequential betting: factors are per-round e-values,
/// wealth[k] is the running product with wealth[0] = 1.
struct MartingaleTrace {
  std::vector<double> factors;
  std::vector<double> wealth;  // length factors.size() + 1

  double final_wealth() const { return wealth.back(); }
};

/// Running product of sequentially reported e-values. Each factor is
/// treated as a conditionally valid e-value from one research group, so
/// the trace is a nonnegative supermartingale started at 1.
inline MartingaleTrace sequential_product(std::span<const double> factors) {
  MartingaleTrace trace;
  trace.factors.assign(factors.begin(), factors.end());
  trace.wealth.reserve(factors.size() + 1);
  trace.wealth.push_back(1.0);
  for (double f : factors) {
    if (std::isnan(f) || f < 0.0) {
      throw std::invalid_argument("sequential_product: factors must be nonnegative");
    }
    // a zero factor bankrupts the process even after an infinite win
    const double prev = trace.wealth.back();
    trace.wealth.push_back(f == 0.0 ? 0.0 : prev * f);
  }
  return trace;
}

inline MartingaleTrace sequential_product(std::initializer_list<double> factors) {
  return sequential_product(std::span<const double>(factors.begin(), factors.size()));
}

/// Pointwise convex combination of e-variables on one space. The mean of
/// valid e-variables is valid: E of the mean is the mean of the E's.
inline RandomVariable weighted_average_e(std::span<const RandomVariable> evars,
                                         std::span<const double> weights) {
  if (evars.empty()) {
    throw std::invalid_argument("weighted_average_e: need at least one e-variable");
  }
  if (weights.size() != evars.size()) {
    throw std::invalid_argument("weighted_average_e: one weight per e-variable required");
  }
  const std::size_t n = evars.front().size();
  double total = 0.0;
  for (double w : weights) {
    if (std::isnan(w) || w < 0.0) {
      throw std::invalid_argument("weighted_average_e: weights must be nonnegative");
    }
    total += w;
  }
  if (total <= 0.0) {
    throw std::invalid_argument("weighted_average_e: weights must not all be zero");
  }
  std::vector<double> mean(n, 0.0);
  for (std::size_t k = 0; k < evars.size(); ++k) {
    if (evars[k].size() != n) {
      throw std::invalid_argument("weighted_average_e: e-variables live on different spaces");
    }
    const double w = weights[k] / total;
    for (std::size_t i = 0; i < n; ++i) mean[i] += w * evars[k][i];
  }
  return RandomVariable(std::move(mean));
}

/// Plain arithmetic mean of e-variables.
inline RandomVariable average_e(std::span<const RandomVariable> evars) {
  const std::vector<double> weights(evars.size(), 1.0);
  return weighted_average_e(evars, weights);
}

/// Witness that averaging p-variables is invalid: two individually exact
/// p-variables whose mean is constant and sits below 1 with certainty.
struct CounterexampleCertificate {
  FiniteSpace space;
  std::vector<RandomVariable> p_vars;
  double threshold;  // the constant value of the mean, (N+1)/(2N)
  double violation;  // P(mean <= threshold) - threshold = 1 - threshold
};

/// Antithetic construction on the uniform N-outcome space: p1(i) = i/N
/// and p2(i) = (N+1-i)/N are both exactly valid, but their mean is the
/// constant (N+1)/(2N), which undershoots its own CDF by 1 - (N+1)/(2N).
inline CounterexampleCertificate p_average_counterexample(std::size_t grid_size) {
  if (grid_size < 2) {
    throw std::invalid_argument("p_average_counterexample: grid_size must be >= 2");
  }
  FiniteSpace space = uniform_space(grid_size);
  RandomVariable p1 = grid_p_variable(grid_size);
  std::vector<double> reversed(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) reversed[i] = p1[grid_size - 1 - i];
  RandomVariable p2(std::move(reversed));

  // threshold is the pointwise max of the mean so that P(mean <= t) = 1
  // holds by construction; up to rounding it equals (N+1)/(2N)
  std::vector<double> mean(grid_size);
  double threshold = 0.0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    mean[i] = 0.5 * (p1[i] + p2[i]);
    threshold = std::max(threshold, mean[i]);
  }
  const double cdf = cdf_at(space, RandomVariable(std::move(mean)), threshold);
  CounterexampleCertificate cert{std::move(space), {std::move(p1), std::move(p2)},
                                 threshold, cdf - threshold};
  return cert;
}

/// Re-derives every claim a certificate makes: each input passes the
/// exact p-variable check, and the recomputed CDF gap at the threshold
/// matches the recorded violation and is strictly positive.
inline bool verify_certificate(const CounterexampleCertificate& cert) {
  for (const RandomVariable& p : cert.p_vars) {
    if (!is_p_variable(cert.space, p, 0.0)) return false;
  }
  std::vector<double> mean_values(cert.space.size(), 0.0);
  const double w = 1.0 / static_cast<double>(cert.p_vars.size());
  for (const RandomVariable& p : cert.p_vars) {
    for (std::size_t i = 0; i < cert.space.size(); ++i) mean_values[i] += w * p[i];
  }
  const double cdf = cdf_at(cert.space, RandomVariable(std::move(mean_values)), cert.threshold);
  const double violation = cdf - cert.threshold;
  return violation > 0.0 && violation == cert.violation;
}

/// CLI-facing summary juxtaposing e-value averaging (valid) against
/// p-value averaging (not valid in general).
struct CombineReport {
  RandomVariable e_mean;
  bool e_mean_valid = false;
  RandomVariable e_mean_p;              // e_to_p applied pointwise to e_mean
  std::optional<double> p_violation;    // absent when no p-variables given

  CombineReport() : e_mean(std::vector<double>{}), e_mean_p(std::vector<double>{}) {}
};

inline CombineReport combine_report(const FiniteSpace& space,
                                    std::span<const RandomVariable> evars,
                                    std::span<const RandomVariable> p_vars,
                                    double tol = kDefaultTolerance) {
  CombineReport report;
  report.e_mean = average_e(evars);
  check_same_dimension(space, report.e_mean);
  report.e_mean_valid = is_e_variable(space, report.e_mean, tol);
  report.e_mean_p = apply_e_to_p(report.e_mean);

  if (!p_vars.empty()) {
    std::vector<double> mean(space.size(), 0.0);
    for (const RandomVariable& p : p_vars) {
      check_same_dimension(space, p);
      for (std::size_t i = 0; i < space.size(); ++i) {
        mean[i] += p[i] / static_cast<double>(p_vars.size());
      }
    }
    const RandomVariable p_mean(std::move(mean));
    double worst = 0.0;
    for (double v : achieved_values(p_mean)) {
      if (v >= 1.0) break;
      worst = std::max(worst, cdf_at(space, p_mean, v) - v);
    }
    report.p_violation = worst;
  }
  return report;
}

}  // namespace evaltk
