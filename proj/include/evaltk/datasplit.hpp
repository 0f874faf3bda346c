#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "core_space.hpp"
#include "rng.hpp"

namespace evaltk {

/// Binary sample for the data-splitting harness.
class BernoulliDataset {
 public:
  explicit BernoulliDataset(std::vector<int> bits) : bits_(std::move(bits)) {
    if (bits_.size() < 2) {
      throw std::invalid_argument("BernoulliDataset: need at least 2 observations");
    }
    for (int b : bits_) {
      if (b != 0 && b != 1) {
        throw std::invalid_argument("BernoulliDataset: observations must be 0 or 1");
      }
    }
  }

  std::size_t size() const { return bits_.size(); }
  const std::vector<int>& bits() const { return bits_; }
  int bit(std::size_t i) const { return bits_[i]; }

  int count_ones() const { return std::accumulate(bits_.begin(), bits_.end(), 0); }

 private:
  std::vector<int> bits_;
};

/// Disjoint train/test index partition, both halves sorted ascending.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Train size for a fraction: round(n * fraction), half away from zero.
/// Both halves must end up nonempty.
inline std::size_t train_size(std::size_t n, double train_fraction) {
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw std::domain_error("train_fraction must lie in (0, 1)");
  }
  const long long k = std::llround(static_cast<double>(n) * train_fraction);
  if (k < 1 || static_cast<std::size_t>(k) >= n) {
    throw std::domain_error("degenerate split: train and test must both be nonempty");
  }
  return static_cast<std::size_t>(k);
}

/// Seeded random partition. The same seed always yields the same split.
inline Split random_split(const BernoulliDataset& data, std::uint64_t seed,
                          double train_fraction = 0.5) {
  const std::size_t n = data.size();
  const std::size_t k = train_size(n, train_fraction);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(seed);
  rng.shuffle(order);
  Split split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace detail {

inline std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t s = a + b;
  return s < a ? ~0ULL : s;
}

// Pascal triangle row-by-row with saturation; fine for the guarded
// exhaustive-mode sizes.
inline std::vector<std::vector<std::uint64_t>> binomial_table(std::size_t n) {
  std::vector<std::vector<std::uint64_t>> c(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    c[i].assign(i + 2, 0);
    c[i][0] = 1;
    for (std::size_t j = 1; j <= i; ++j) {
      c[i][j] = saturating_add(c[i - 1][j - 1], j <= i - 1 ? c[i - 1][j] : 0);
    }
  }
  return c;
}

// Runs fn(i) for i in [0, count), optionally on several threads. Results
// must be written to per-index slots; aggregation stays with the caller,
// so the outcome is identical for every thread count.
template <typename Fn>
void for_each_index(std::size_t count, unsigned n_threads, Fn&& fn) {
  if (n_threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned workers = std::min<unsigned>(n_threads, static_cast<unsigned>(count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = static_cast<std::size_t>(w) * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

inline double sample_std(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace detail

/// Number of distinct splits at the given fraction: C(n, train_size).
inline std::uint64_t split_count(std::size_t n, double train_fraction = 0.5) {
  const std::size_t k = train_size(n, train_fraction);
  const auto table = detail::binomial_table(n);
  return table[n][k];
}

/// The rank-th train/test partition in lexicographic order of the train
/// index set. Ranks 0 .. split_count-1 enumerate every split exactly once.
inline Split nth_split(const BernoulliDataset& data, std::uint64_t rank,
                       double train_fraction = 0.5) {
  const std::size_t n = data.size();
  std::size_t k = train_size(n, train_fraction);
  const auto table = detail::binomial_table(n);
  if (rank >= table[n][k]) {
    throw std::domain_error("nth_split: rank out of range");
  }
  Split split;
  split.train.reserve(k);
  for (std::size_t i = 0; i < n && k > 0; ++i) {
    // combinations starting with index i: C(n - 1 - i, k - 1)
    const std::uint64_t with_i = table[n - 1 - i][k - 1];
    if (rank < with_i) {
      split.train.push_back(i);
      --k;
    } else {
      rank -= with_i;
    }
  }
  split.test.reserve(n - split.train.size());
  for (std::size_t i = 0, j = 0; i < n; ++i) {
    if (j < split.train.size() && split.train[j] == i) {
      ++j;
    } else {
      split.test.push_back(i);
    }
  }
  return split;
}

/// Parameters shared by the split e-value pipeline. Smoothing keeps the
/// fitted rate strictly inside (0, 1), so test-half likelihoods never
/// hit zero.
struct SplitParams {
  double null_theta = 0.5;
  double smoothing = 1.0;
  double train_fraction = 0.5;

  void validate() const {
    if (!(null_theta > 0.0) || !(null_theta < 1.0)) {
      throw std::domain_error("null_theta must lie in (0, 1)");
    }
    if (!(smoothing > 0.0)) {
      throw std::domain_error("smoothing must be > 0");
    }
  }
};

/// Smoothed estimate of the Bernoulli rate from the train half.
inline double fit_theta(const BernoulliDataset& data, std::span<const std::size_t> train,
                        double smoothing) {
  double k = 0.0;
  for (std::size_t i : train) k += data.bit(i);
  return (k + smoothing) / (static_cast<double>(train.size()) + 2.0 * smoothing);
}

/// Likelihood-ratio e-value of a fixed split: fit theta-hat on the train
/// half, then take the product over the test half of
/// (theta_hat/theta0)^x * ((1-theta_hat)/(1-theta0))^(1-x).
/// Conditionally on the split this is an exact e-variable under theta0:
/// the test half is independent of the fitted alternative.
inline double split_e_value_on(const BernoulliDataset& data, const Split& split,
                               double null_theta, double smoothing) {
  SplitParams{null_theta, smoothing}.validate();
  if (split.train.empty() || split.test.empty()) {
    throw std::domain_error("split_e_value_on: degenerate split");
  }
  const double theta_hat = fit_theta(data, split.train, smoothing);
  double ones = 0.0;
  for (std::size_t i : split.test) ones += data.bit(i);
  const double zeros = static_cast<double>(split.test.size()) - ones;
  return std::pow(theta_hat / null_theta, ones) *
         std::pow((1.0 - theta_hat) / (1.0 - null_theta), zeros);
}

/// Seeded one-shot version: split at random, then score the test half.
inline double split_e_value(const BernoulliDataset& data, std::uint64_t seed, double null_theta,
                            double smoothing, double train_fraction = 0.5) {
  return split_e_value_on(data, random_split(data, seed, train_fraction), null_theta, smoothing);
}

/// Neyman-Pearson p-value on the test half, with the alternative fixed to
/// the train-fitted theta-hat so the e/p comparison sees the same
/// information flow. One-sided in the direction of theta-hat; ties are
/// grouped, so the result is superuniform under theta0.
inline double np_p_value_on(const BernoulliDataset& data, const Split& split, double null_theta,
                            double smoothing) {
  SplitParams{null_theta, smoothing}.validate();
  if (split.train.empty() || split.test.empty()) {
    throw std::domain_error("np_p_value_on: degenerate split");
  }
  const double theta_hat = fit_theta(data, split.train, smoothing);
  if (theta_hat == null_theta) return 1.0;
  const std::size_t m = split.test.size();
  int k_obs = 0;
  for (std::size_t i : split.test) k_obs += data.bit(i);

  // Binomial(m, theta0) pmf by upward recurrence.
  std::vector<double> pmf(m + 1);
  pmf[0] = std::pow(1.0 - null_theta, static_cast<double>(m));
  for (std::size_t k = 0; k + 1 <= m; ++k) {
    pmf[k + 1] = pmf[k] * (static_cast<double>(m - k) / static_cast<double>(k + 1)) *
                 (null_theta / (1.0 - null_theta));
  }
  // LR is monotone in the test-half count, so the rejection ordering is a
  // count tail in the direction of the fitted alternative.
  double p = 0.0;
  if (theta_hat > null_theta) {
    for (std::size_t k = static_cast<std::size_t>(k_obs); k <= m; ++k) p += pmf[k];
  } else {
    for (std::size_t k = 0; k <= static_cast<std::size_t>(k_obs); ++k) p += pmf[k];
  }
  return std::min(p, 1.0);
}

/// Per-split e-values and p-values plus the derandomized (seed-averaged)
/// e-value and the spread statistics behind the reproducibility story.
struct SplitReport {
  std::vector<std::pair<std::uint64_t, double>> per_seed;  // (seed or rank, e-value)
  double derandomized_e = 0.0;           // arithmetic mean of per-seed e-values
  std::optional<double> e_spread;        // std of log per-seed e-values
  std::vector<double> p_per_seed;        // NP p-value of each split's test half
  std::optional<double> p_spread;        // std of per-seed p-values
  bool exhaustive = false;
};

/// Cap on enumerable splits in exhaustive mode.
inline constexpr std::uint64_t kMaxExhaustiveSplits = 100000;

namespace detail {

template <typename SplitForIndex>
SplitReport run_split_harness(const BernoulliDataset& data, std::size_t count,
                              const SplitParams& params, unsigned n_threads,
                              SplitForIndex&& split_for_index, bool exhaustive) {
  params.validate();
  if (count == 0) {
    throw std::domain_error("derandomized_e: need at least one split");
  }
  std::vector<std::uint64_t> keys(count);
  std::vector<double> e_values(count);
  std::vector<double> p_values(count);
  for_each_index(count, n_threads, [&](std::size_t i) {
    auto [key, split] = split_for_index(i);
    keys[i] = key;
    e_values[i] = split_e_value_on(data, split, params.null_theta, params.smoothing);
    p_values[i] = np_p_value_on(data, split, params.null_theta, params.smoothing);
  });

  SplitReport report;
  report.exhaustive = exhaustive;
  report.per_seed.reserve(count);
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    report.per_seed.emplace_back(keys[i], e_values[i]);
    sum += e_values[i];
  }
  report.derandomized_e = sum / static_cast<double>(count);
  report.p_per_seed = p_values;
  if (count >= 2) {
    std::vector<double> log_e(count);
    for (std::size_t i = 0; i < count; ++i) log_e[i] = std::log(e_values[i]);
    report.e_spread = sample_std(log_e);
    report.p_spread = sample_std(p_values);
  }
  return report;
}

}  // namespace detail

/// Averages the split e-value over an explicit seed list. Results are
/// aggregated in seed order, so a fixed list gives bit-identical output
/// for every thread count.
inline SplitReport derandomized_e(const BernoulliDataset& data,
                                  std::span<const std::uint64_t> seeds,
                                  const SplitParams& params = {}, unsigned n_threads = 1) {
  return detail::run_split_harness(
      data, seeds.size(), params, n_threads,
      [&](std::size_t i) {
        return std::pair(seeds[i], random_split(data, seeds[i], params.train_fraction));
      },
      /*exhaustive=*/false);
}

/// Averages over every split at the given fraction. The result is a
/// deterministic function of the data: no seed appears anywhere, which is
/// the derandomization giving back inferential reproducibility.
inline SplitReport derandomized_e_exhaustive(const BernoulliDataset& data,
                                             const SplitParams& params = {},
                                             unsigned n_threads = 1) {
  const std::uint64_t count = split_count(data.size(), params.train_fraction);
  if (count > kMaxExhaustiveSplits) {
    throw std::domain_error("derandomized_e_exhaustive: too many splits to enumerate");
  }
  return detail::run_split_harness(
      data, static_cast<std::size_t>(count), params, n_threads,
      [&](std::size_t i) {
        return std::pair(static_cast<std::uint64_t>(i),
                         nth_split(data, i, params.train_fraction));
      },
      /*exhaustive=*/true);
}

/// Spread comparison between per-seed answers and batch-averaged answers.
/// Per-seed e-values scatter; averaging over disjoint seed batches shrinks
/// the scatter, and full enumeration removes it entirely.
struct ReproducibilityReport {
  std::size_t n_seeds = 0;
  bool exhaustive = false;
  bool degenerate = false;  // too few seeds for any spread to exist
  std::optional<double> e_spread;
  std::optional<double> p_spread;
  // (batch size, std of batch-mean e across disjoint batches)
  std::vector<std::pair<std::size_t, std::optional<double>>> batch_spreads;
  std::optional<double> derandomized_spread;  // exhaustive mode: spread across reruns
};

inline ReproducibilityReport reproducibility_report(const BernoulliDataset& data,
                                                    std::size_t n_seeds,
                                                    const SplitParams& params = {},
                                                    std::span<const std::size_t> batch_sizes = {},
                                                    std::uint64_t base_seed = 0,
                                                    unsigned n_threads = 1) {
  if (n_seeds < 1) {
    throw std::invalid_argument("reproducibility_report: n_seeds must be >= 1");
  }
  SplitMix64 seeder(base_seed);
  std::vector<std::uint64_t> seeds(n_seeds);
  for (std::uint64_t& s : seeds) s = seeder.next_u64();
  const SplitReport base = derandomized_e(data, seeds, params, n_threads);

  ReproducibilityReport report;
  report.n_seeds = n_seeds;
  report.degenerate = n_seeds < 2;
  report.e_spread = base.e_spread;
  report.p_spread = base.p_spread;
  for (std::size_t b : batch_sizes) {
    if (b < 1) throw std::invalid_argument("reproducibility_report: batch size must be >= 1");
    const std::size_t n_batches = n_seeds / b;
    std::optional<double> spread;
    if (n_batches >= 2) {
      std::vector<double> batch_means(n_batches);
      for (std::size_t g = 0; g < n_batches; ++g) {
        double sum = 0.0;
        for (std::size_t j = 0; j < b; ++j) sum += base.per_seed[g * b + j].second;
        batch_means[g] = sum / static_cast<double>(b);
      }
      spread = detail::sample_std(batch_means);
    }
    report.batch_spreads.emplace_back(b, spread);
  }
  return report;
}

/// Exhaustive-mode reproducibility: the per-split spread stays (different
/// splits disagree), but the derandomized value is a constant of the
/// data, so its spread across independent reruns is exactly zero.
inline ReproducibilityReport reproducibility_report_exhaustive(const BernoulliDataset& data,
                                                               const SplitParams& params = {},
                                                               unsigned n_threads = 1) {
  const SplitReport first = derandomized_e_exhaustive(data, params, n_threads);
  const SplitReport second = derandomized_e_exhaustive(data, params, n_threads);
  ReproducibilityReport report;
  report.n_seeds = first.per_seed.size();
  report.exhaustive = true;
  report.e_spread = first.e_spread;
  report.p_spread = first.p_spread;
  const std::vector<double> reruns{first.derandomized_e, second.derandomized_e};
  report.derandomized_spread = detail::sample_std(reruns);
  return report;
}

}  // namespace evaltk
