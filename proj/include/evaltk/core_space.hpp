#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace evaltk {

/// Default slack for validity checks; absorbs double rounding in the
/// probability sums. Checks that are exact by construction pass with 0.
inline constexpr double kDefaultTolerance = 1e-9;

/// How far the probabilities of a space may sum from 1.
inline constexpr double kProbSumTolerance = 1e-12;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Explicit finite probability space: ordered outcome labels with one
/// probability each. Immutable after construction; every downstream
/// validity claim is an enumerable check against one of these.
class FiniteSpace {
 public:
  FiniteSpace(std::vector<std::string> outcomes, std::vector<double> probs)
      : outcomes_(std::move(outcomes)), probs_(std::move(probs)) {
    if (outcomes_.empty()) {
      throw std::invalid_argument("FiniteSpace: outcome list is empty");
    }
    if (outcomes_.size() != probs_.size()) {
      throw std::invalid_argument("FiniteSpace: outcomes and probs differ in length");
    }
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || p > 1.0) {
        throw std::invalid_argument("FiniteSpace: probabilities must lie in [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbSumTolerance) {
      throw std::invalid_argument("FiniteSpace: probabilities must sum to 1");
    }
    index_.reserve(outcomes_.size());
    for (std::size_t i = 0; i < outcomes_.size(); ++i) {
      if (!index_.emplace(outcomes_[i], i).second) {
        throw std::invalid_argument("FiniteSpace: duplicate outcome label '" + outcomes_[i] + "'");
      }
    }
  }

  std::size_t size() const { return outcomes_.size(); }
  const std::vector<std::string>& outcomes() const { return outcomes_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::string& outcome(std::size_t i) const { return outcomes_[i]; }
  double prob(std::size_t i) const { return probs_[i]; }

  std::optional<std::size_t> find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view label) const {
    auto idx = find(label);
    if (!idx) {
      throw std::invalid_argument("FiniteSpace: unknown outcome label '" + std::string(label) + "'");
    }
    return *idx;
  }

 private:
  std::vector<std::string> outcomes_;
  std::vector<double> probs_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Outcome -> extended nonnegative real, positional over some space.
/// +inf is permitted (e-variables use it on null-probability-zero
/// outcomes); negative values and NaN are rejected at construction.
class RandomVariable {
 public:
  explicit RandomVariable(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
      if (std::isnan(v) || v < 0.0) {
        throw std::invalid_argument("RandomVariable: values must be nonnegative");
      }
    }
  }

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

inline void check_same_dimension(const FiniteSpace& space, const RandomVariable& rv) {
  if (space.size() != rv.size()) {
    throw std::invalid_argument("random variable does not match the space dimension");
  }
}

/// E_P[rv] = sum_i probs[i] * values[i], accumulated in outcome order.
/// An infinite value on a positive-probability outcome gives +inf;
/// probability-zero outcomes contribute nothing regardless of value.
inline double expectation(const FiniteSpace& space, const RandomVariable& rv) {
  check_same_dimension(space, rv);
  double sum = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double p = space.prob(i);
    if (p == 0.0) continue;
    if (std::isinf(rv[i])) return kInfinity;
    sum += p * rv[i];
  }
  return sum;
}

/// e-variable check: E_P[rv] <= 1 + tol.
inline bool is_e_variable(const FiniteSpace& space, const RandomVariable& rv,
                          double tol = kDefaultTolerance) {
  if (tol < 0.0) throw std::invalid_argument("is_e_variable: tol must be >= 0");
  return expectation(space, rv) <= 1.0 + tol;
}

/// P(rv <= v), with the sum taken in outcome order. Summing in a fixed
/// order keeps the by-construction-exact p-variables exact: the CDF of a
/// subset of outcomes never exceeds the CDF of a superset.
inline double cdf_at(const FiniteSpace& space, const RandomVariable& rv, double v) {
  check_same_dimension(space, rv);
  double sum = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (rv[i] <= v) sum += space.prob(i);
  }
  return sum;
}

/// Distinct values taken by rv, ascending. +inf is kept; it can be an
/// achieved value of an e-variable.
inline std::vector<double> achieved_values(const RandomVariable& rv) {
  std::vector<double> vals(rv.values());
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  return vals;
}

/// p-variable check: P(rv <= v) <= v + tol at every achieved value v < 1.
/// On a finite space P(rv <= alpha) is a step function of alpha, so
/// checking at the achieved values decides the condition for all alpha.
inline bool is_p_variable(const FiniteSpace& space, const RandomVariable& rv,
                          double tol = kDefaultTolerance) {
  if (tol < 0.0) throw std::invalid_argument("is_p_variable: tol must be >= 0");
  check_same_dimension(space, rv);
  for (double v : achieved_values(rv)) {
    if (v >= 1.0) break;
    if (cdf_at(space, rv, v) > v + tol) return false;
  }
  return true;
}

/// An a-priori chosen subset E of a space's outcomes, with alpha = P(E)
/// precomputed in outcome order.
class RejectionRegion {
 public:
  RejectionRegion(FiniteSpace space, std::span<const std::string> members)
      : space_(std::move(space)), mask_(space_.size(), 0) {
    for (const std::string& label : members) {
      mask_[space_.index_of(label)] = 1;
    }
    alpha_ = 0.0;
    for (std::size_t i = 0; i < space_.size(); ++i) {
      if (mask_[i]) alpha_ += space_.prob(i);
    }
  }

  RejectionRegion(FiniteSpace space, std::initializer_list<std::string> members)
      : RejectionRegion(std::move(space), std::span<const std::string>(members.begin(), members.size())) {}

  const FiniteSpace& space() const { return space_; }
  double alpha() const { return alpha_; }
  bool contains_index(std::size_t i) const { return mask_[i] != 0; }
  bool contains(std::string_view label) const { return contains_index(space_.index_of(label)); }

  std::vector<std::string> members() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < space_.size(); ++i) {
      if (mask_[i]) out.push_back(space_.outcome(i));
    }
    return out;
  }

 private:
  FiniteSpace space_;
  std::vector<char> mask_;
  double alpha_;
};

/// Uniform space on n outcomes labeled "o1".."on".
inline FiniteSpace uniform_space(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_space: n must be >= 1");
  std::vector<std::string> outcomes;
  outcomes.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) outcomes.push_back("o" + std::to_string(i));
  return FiniteSpace(std::move(outcomes), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

/// The grid p-variable p(i) = i/n on uniform_space(n). Values are the
/// running sums of the space's own probabilities (final value pinned to
/// 1), so P(p <= p(k)) reproduces p(k) bit for bit and the variable is
/// exactly uniform: it passes is_p_variable with tol = 0.
inline RandomVariable grid_p_variable(std::size_t n) {
  if (n == 0) throw std::invalid_argument("grid_p_variable: n must be >= 1");
  const double step = 1.0 / static_cast<double>(n);
  std::vector<double> values(n);
  double run = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    run += step;
    values[i] = std::min(run, 1.0);
  }
  values[n - 1] = 1.0;
  return RandomVariable(std::move(values));
}

}  // namespace evaltk
