#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "core_space.hpp"
#include "rng.hpp"

namespace evaltk {

/// Simple null P and simple alternative Q over one set of outcomes.
class HypothesisPair {
 public:
  HypothesisPair(std::vector<std::string> outcomes, std::vector<double> null_probs,
                 std::vector<double> alt_probs)
      : null_(outcomes, std::move(null_probs)), alt_(std::move(outcomes), std::move(alt_probs)) {}

  const FiniteSpace& null_space() const { return null_; }
  const FiniteSpace& alt_space() const { return alt_; }
  std::size_t size() const { return null_.size(); }
  const std::vector<std::string>& outcomes() const { return null_.outcomes(); }

  bool full_shared_support() const {
    for (std::size_t i = 0; i < size(); ++i) {
      if (null_.prob(i) == 0.0 || alt_.prob(i) == 0.0) return false;
    }
    return true;
  }

 private:
  FiniteSpace null_;
  FiniteSpace alt_;
};

/// Binary test in the style of Cournot's principle: an a-priori rejection
/// region E with size alpha = P(E).
struct CournotTest {
  RejectionRegion region;
  double alpha;

  explicit CournotTest(RejectionRegion r) : region(std::move(r)), alpha(region.alpha()) {}
};

enum class Decision { Reject, NoEvidence };

inline std::string_view to_string(Decision d) {
  return d == Decision::Reject ? "reject" : "no_evidence";
}

/// All-or-nothing decision: Reject iff the outcome falls in the region.
/// Depends only on membership, never on alpha. Unknown labels throw.
inline Decision cournot_decide(const CournotTest& test, std::string_view outcome) {
  return test.region.contains(outcome) ? Decision::Reject : Decision::NoEvidence;
}

/// p-embedding of a binary test: alpha on E, 1 elsewhere. Exactly a
/// p-variable (with tol = 0) because the only checked CDF step reproduces
/// the alpha sum bit for bit.
inline RandomVariable embed_p(const CournotTest& test) {
  if (test.alpha <= 0.0) {
    throw std::domain_error("embed_p: region has probability zero");
  }
  const FiniteSpace& space = test.region.space();
  std::vector<double> values(space.size(), 1.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (test.region.contains_index(i)) values[i] = test.alpha;
  }
  return RandomVariable(std::move(values));
}

/// e-embedding of a binary test: 1/alpha on E, 0 elsewhere. Expectation
/// is (1/alpha) * alpha = 1.
inline RandomVariable embed_e(const CournotTest& test) {
  if (test.alpha <= 0.0) {
    throw std::domain_error("embed_e: region has probability zero");
  }
  const FiniteSpace& space = test.region.space();
  const double inv_alpha = 1.0 / test.alpha;
  std::vector<double> values(space.size(), 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (test.region.contains_index(i)) values[i] = inv_alpha;
  }
  return RandomVariable(std::move(values));
}

/// The likelihood ratio Q/P as an e-variable for the null P. Outcomes
/// with P(y) = 0 get +inf, which is harmless: they carry no null mass.
/// E_P equals 1 exactly when Q's support lies inside P's.
inline RandomVariable likelihood_ratio_e(const HypothesisPair& pair) {
  std::vector<double> values(pair.size());
  for (std::size_t i = 0; i < pair.size(); ++i) {
    const double p = pair.null_space().prob(i);
    values[i] = p == 0.0 ? kInfinity : pair.alt_space().prob(i) / p;
  }
  return RandomVariable(std::move(values));
}

/// Neyman-Pearson p-variable with the likelihood ratio as test statistic:
/// p(y) = P(LR >= LR(y)). Ties in LR are grouped (the conservative
/// convention), which makes the output superuniform, hence exactly valid.
inline RandomVariable np_p_variable(const HypothesisPair& pair) {
  const RandomVariable lr = likelihood_ratio_e(pair);
  const FiniteSpace& null_space = pair.null_space();
  std::vector<double> values(pair.size());
  for (std::size_t y = 0; y < pair.size(); ++y) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pair.size(); ++i) {
      if (lr[i] >= lr[y]) sum += null_space.prob(i);
    }
    values[y] = sum;
  }
  return RandomVariable(std::move(values));
}

/// Result of the randomized growth-rate optimality check of the
/// likelihood ratio: no competing e-variable should beat E_Q[log LR].
struct LogOptimalityReport {
  int n_trials = 0;
  double kl = 0.0;            // E_Q[log(Q/P)], the benchmark growth rate
  double max_excess = 0.0;    // max over trials of E_Q[log e] - kl
  int violations = 0;         // trials with excess above tolerance
  bool pass() const { return violations == 0; }
};

/// Samples n_trials random e-variables (uniform values rescaled to
/// E_P = 1) and verifies none has a larger expected log under Q than the
/// likelihood ratio. Deterministic for a given seed; trial substreams are
/// forked by index, so any execution order gives the same report.
inline LogOptimalityReport log_optimality_check(const HypothesisPair& pair, int n_trials,
                                                std::uint64_t seed,
                                                double tol = kDefaultTolerance) {
  if (!pair.full_shared_support()) {
    throw std::domain_error("log_optimality_check: P and Q must share full support");
  }
  if (n_trials < 1) {
    throw std::invalid_argument("log_optimality_check: n_trials must be >= 1");
  }
  const FiniteSpace& p_space = pair.null_space();
  const FiniteSpace& q_space = pair.alt_space();
  const std::size_t n = pair.size();

  LogOptimalityReport report;
  report.n_trials = n_trials;
  for (std::size_t i = 0; i < n; ++i) {
    report.kl += q_space.prob(i) * std::log(q_space.prob(i) / p_space.prob(i));
  }

  const SplitMix64 base(seed);
  report.max_excess = -kInfinity;
  for (int trial = 0; trial < n_trials; ++trial) {
    SplitMix64 rng = base.fork(static_cast<std::uint64_t>(trial));
    std::vector<double> values(n);
    double null_mean = 0.0;
    do {
      null_mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        values[i] = rng.next_unit();
        null_mean += p_space.prob(i) * values[i];
      }
    } while (null_mean == 0.0);

    double log_growth = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      log_growth += q_space.prob(i) * std::log(values[i] / null_mean);
    }
    const double excess = log_growth - report.kl;
    if (excess > report.max_excess) report.max_excess = excess;
    if (excess > tol) ++report.violations;
  }
  return report;
}

/// Exact null distribution of a p-variable, summarized at its achieved
/// values. Superuniform means every gap P(p <= v) - v is nonpositive;
/// the distribution is exactly uniform when every gap is zero.
struct UniformityReport {
  std::vector<std::pair<double, double>> achieved_cdf;  // (value, P(p <= value))
  double max_gap = 0.0;                                 // max of cdf - value
  bool superuniform = false;
  bool exact_uniform = false;
  std::vector<double> bin_cdf;  // P(p <= j/n_bins) for j = 1..n_bins
};

inline UniformityReport p_uniformity_check(const FiniteSpace& space, const RandomVariable& p,
                                           int n_bins = 20, double tol = kDefaultTolerance) {
  if (n_bins < 1) throw std::invalid_argument("p_uniformity_check: n_bins must be >= 1");
  check_same_dimension(space, p);
  UniformityReport report;
  report.max_gap = 0.0;
  double max_abs_gap = 0.0;
  for (double v : achieved_values(p)) {
    const double cdf = cdf_at(space, p, v);
    report.achieved_cdf.emplace_back(v, cdf);
    // superuniformity constrains P(p <= alpha) only for alpha in (0, 1),
    // so values at or above 1 are reported but never scored
    if (v >= 1.0) continue;
    const double gap = cdf - v;
    if (gap > report.max_gap) report.max_gap = gap;
    if (std::abs(gap) > max_abs_gap) max_abs_gap = std::abs(gap);
  }
  report.superuniform = report.max_gap <= tol;
  report.exact_uniform = max_abs_gap <= tol;
  report.bin_cdf.resize(static_cast<std::size_t>(n_bins));
  for (int j = 1; j <= n_bins; ++j) {
    report.bin_cdf[static_cast<std::size_t>(j - 1)] =
        cdf_at(space, p, static_cast<double>(j) / n_bins);
  }
  return report;
}

/// Uniformity of the Neyman-Pearson p-variable under the pair's null.
inline UniformityReport p_uniformity_check(const HypothesisPair& pair, int n_bins = 20,
                                           double tol = kDefaultTolerance) {
  return p_uniformity_check(pair.null_space(), np_p_variable(pair), n_bins, tol);
}

}  // namespace evaltk
