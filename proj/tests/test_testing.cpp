#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <evaltk/calibration.hpp>
#include <evaltk/core_space.hpp>
#include <evaltk/rng.hpp>
#include <evaltk/testing.hpp>

#include "testutil.hpp"

#include <cmath>

using namespace evaltk;

namespace {

HypothesisPair ab_pair(double q_a, double q_b) {
  return HypothesisPair({"a", "b"}, {0.5, 0.5}, {q_a, q_b});
}

// Random rejection region over a random space; may be empty or full.
CournotTest random_test(SplitMix64& rng, std::size_t max_outcomes) {
  const std::size_t n = 2 + rng.next_below(max_outcomes - 1);
  FiniteSpace space = testutil::random_space(rng, n);
  std::vector<std::string> members;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.next_unit() < 0.4) members.push_back(space.outcome(i));
  }
  if (members.empty()) members.push_back(space.outcome(0));
  return CournotTest(RejectionRegion(std::move(space), members));
}

}  // namespace

TEST_SUITE("testing.cournot") {
  TEST_CASE("reject inside the region, no evidence outside") {
    FiniteSpace s({"a", "b", "c"}, {0.2, 0.3, 0.5});
    CournotTest test(RejectionRegion(s, {"a"}));
    CHECK(cournot_decide(test, "a") == Decision::Reject);
    CHECK(cournot_decide(test, "b") == Decision::NoEvidence);
    CHECK(cournot_decide(test, "c") == Decision::NoEvidence);
  }

  TEST_CASE("empty region never rejects") {
    CournotTest test(RejectionRegion(uniform_space(3), std::initializer_list<std::string>{}));
    CHECK(test.alpha == 0.0);
    for (const char* label : {"o1", "o2", "o3"}) {
      CHECK(cournot_decide(test, label) == Decision::NoEvidence);
    }
  }

  TEST_CASE("unknown outcome label throws") {
    CournotTest test(RejectionRegion(uniform_space(2), {"o1"}));
    CHECK_THROWS_AS(cournot_decide(test, "zzz"), std::invalid_argument);
  }

  TEST_CASE("decision ignores alpha, only membership matters") {
    FiniteSpace skew({"a", "b"}, {0.999, 0.001});
    CournotTest test(RejectionRegion(skew, {"b"}));
    CHECK(cournot_decide(test, "b") == Decision::Reject);
    CHECK(cournot_decide(test, "a") == Decision::NoEvidence);
  }
}

TEST_SUITE("testing.embeddings") {
  TEST_CASE("p-embedding at alpha 0.05 on 20 equiprobable outcomes") {
    FiniteSpace space = uniform_space(20);
    CournotTest test(RejectionRegion(space, {"o1"}));
    CHECK(test.alpha == doctest::Approx(0.05).epsilon(1e-15));
    RandomVariable p = embed_p(test);
    CHECK(p[0] == test.alpha);
    for (std::size_t i = 1; i < 20; ++i) CHECK(p[i] == 1.0);
    CHECK(is_p_variable(space, p, 0.0));
  }

  TEST_CASE("p-embedding of the whole space is constant 1") {
    FiniteSpace space = uniform_space(3);
    CournotTest test(RejectionRegion(space, {"o1", "o2", "o3"}));
    RandomVariable p = embed_p(test);
    for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == 1.0);
  }

  TEST_CASE("p-embedding on the uniform 2-space") {
    CournotTest test(RejectionRegion(uniform_space(2), {"o1"}));
    RandomVariable p = embed_p(test);
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 1.0);
    CHECK(cdf_at(uniform_space(2), p, 0.5) == 0.5);
  }

  TEST_CASE("e-embedding carries 1/alpha on the region") {
    FiniteSpace space = uniform_space(20);
    CournotTest test(RejectionRegion(space, {"o7"}));
    RandomVariable e = embed_e(test);
    CHECK(e[6] == doctest::Approx(20.0).epsilon(1e-14));
    CHECK(e[0] == 0.0);
    CHECK(expectation(space, e) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("e-embedding of the whole space is constant 1") {
    FiniteSpace space({"a", "b"}, {0.5, 0.5});
    CournotTest test(RejectionRegion(space, {"a", "b"}));
    RandomVariable e = embed_e(test);
    CHECK(e[0] == 1.0);
    CHECK(e[1] == 1.0);
  }

  TEST_CASE("e-embedding on the uniform 4-space") {
    FiniteSpace space = uniform_space(4);
    CournotTest test(RejectionRegion(space, {"o1"}));
    RandomVariable e = embed_e(test);
    CHECK(e[0] == 4.0);
    CHECK(e[1] == 0.0);
    CHECK(is_e_variable(space, e));
  }

  TEST_CASE("degenerate regions are rejected") {
    CournotTest empty(RejectionRegion(uniform_space(2), std::initializer_list<std::string>{}));
    CHECK_THROWS_AS(embed_p(empty), std::domain_error);
    CHECK_THROWS_AS(embed_e(empty), std::domain_error);
  }

  TEST_CASE("randomized regions: exact expectation and exact p-validity") {
    SplitMix64 rng(3701);
    for (int trial = 0; trial < 300; ++trial) {
      auto sub = rng.fork(trial);
      CournotTest test = random_test(sub, 50);
      const FiniteSpace& space = test.region.space();
      CHECK(std::abs(expectation(space, embed_e(test)) - 1.0) <= 1e-12);
      CHECK(is_p_variable(space, embed_p(test), 0.0));
    }
  }

  TEST_CASE("e_to_p of the e-embedding recovers the p-embedding on the region") {
    SplitMix64 rng(3702);
    for (int trial = 0; trial < 100; ++trial) {
      auto sub = rng.fork(trial);
      CournotTest test = random_test(sub, 20);
      if (test.alpha >= 1.0) continue;
      RandomVariable e = embed_e(test);
      RandomVariable p = embed_p(test);
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (test.region.contains_index(i)) {
          CHECK(e_to_p(e[i]) == doctest::Approx(p[i]).epsilon(1e-14));
          CHECK(p[i] == test.alpha);
        }
      }
    }
  }
}

TEST_SUITE("testing.likelihood_ratio") {
  TEST_CASE("uniform null vs (0.9, 0.1)") {
    HypothesisPair pair = ab_pair(0.9, 0.1);
    RandomVariable e = likelihood_ratio_e(pair);
    CHECK(e[0] == doctest::Approx(1.8).epsilon(1e-15));
    CHECK(e[1] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(expectation(pair.null_space(), e) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("Q = P gives the constant 1") {
    HypothesisPair pair = ab_pair(0.5, 0.5);
    RandomVariable e = likelihood_ratio_e(pair);
    CHECK(e[0] == 1.0);
    CHECK(e[1] == 1.0);
  }

  TEST_CASE("Q concentrated on one outcome") {
    HypothesisPair pair = ab_pair(1.0, 0.0);
    RandomVariable e = likelihood_ratio_e(pair);
    CHECK(e[0] == 2.0);
    CHECK(e[1] == 0.0);
  }

  TEST_CASE("null gaps become +inf and keep the e-variable valid") {
    HypothesisPair pair({"a", "b"}, {1.0, 0.0}, {0.5, 0.5});
    RandomVariable e = likelihood_ratio_e(pair);
    CHECK(e[0] == 0.5);
    CHECK(std::isinf(e[1]));
    CHECK(expectation(pair.null_space(), e) == 0.5);
    CHECK(is_e_variable(pair.null_space(), e, 0.0));
  }

  TEST_CASE("unit null expectation on random shared-support pairs") {
    SplitMix64 rng(3703);
    for (int trial = 0; trial < 500; ++trial) {
      auto sub = rng.fork(trial);
      const std::size_t n = 2 + sub.next_below(49);
      std::vector<std::string> outcomes;
      for (std::size_t i = 1; i <= n; ++i) outcomes.push_back("o" + std::to_string(i));
      HypothesisPair pair(outcomes, testutil::random_full_support_probs(sub, n),
                          testutil::random_full_support_probs(sub, n));
      const double mean = expectation(pair.null_space(), likelihood_ratio_e(pair));
      CHECK(std::abs(mean - 1.0) <= 1e-12);
    }
  }
}

TEST_SUITE("testing.np_p_variable") {
  TEST_CASE("uniform null vs (0.9, 0.1)") {
    RandomVariable p = np_p_variable(ab_pair(0.9, 0.1));
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 1.0);
  }

  TEST_CASE("Q = P ties every outcome at p = 1") {
    RandomVariable p = np_p_variable(ab_pair(0.5, 0.5));
    CHECK(p[0] == 1.0);
    CHECK(p[1] == 1.0);
  }

  TEST_CASE("uniform 4-outcome null vs (0.7, 0.1, 0.1, 0.1)") {
    HypothesisPair pair({"a", "b", "c", "d"}, {0.25, 0.25, 0.25, 0.25},
                        {0.7, 0.1, 0.1, 0.1});
    RandomVariable p = np_p_variable(pair);
    CHECK(p[0] == 0.25);
    CHECK(p[1] == 1.0);
    CHECK(p[2] == 1.0);
    CHECK(p[3] == 1.0);
  }

  TEST_CASE("exactly valid on random pairs") {
    SplitMix64 rng(3704);
    for (int trial = 0; trial < 500; ++trial) {
      auto sub = rng.fork(trial);
      const std::size_t n = 2 + sub.next_below(49);
      std::vector<std::string> outcomes;
      for (std::size_t i = 1; i <= n; ++i) outcomes.push_back("o" + std::to_string(i));
      HypothesisPair pair(outcomes, testutil::random_full_support_probs(sub, n),
                          testutil::random_full_support_probs(sub, n));
      CHECK(is_p_variable(pair.null_space(), np_p_variable(pair), 0.0));
    }
  }

  TEST_CASE("valid even when supports differ") {
    HypothesisPair pair({"a", "b", "c"}, {0.5, 0.5, 0.0}, {0.1, 0.0, 0.9});
    RandomVariable p = np_p_variable(pair);
    CHECK(is_p_variable(pair.null_space(), p, 0.0));
    // the null-impossible outcome has LR +inf, so its p-value is P(empty-or-zero set)
    CHECK(p[2] == 0.0);
  }
}

TEST_SUITE("testing.log_optimality") {
  TEST_CASE("Q = P: zero KL and no violations") {
    LogOptimalityReport r = log_optimality_check(ab_pair(0.5, 0.5), 200, 42);
    CHECK(r.kl == 0.0);
    CHECK(r.violations == 0);
    CHECK(r.max_excess <= 0.0);
    CHECK(r.pass());
  }

  TEST_CASE("uniform vs (0.9, 0.1): 1000 trials, zero violations") {
    LogOptimalityReport r = log_optimality_check(ab_pair(0.9, 0.1), 1000, 7);
    CHECK(r.kl == doctest::Approx(0.9 * std::log(1.8) + 0.1 * std::log(0.2)).epsilon(1e-12));
    CHECK(r.violations == 0);
    CHECK(r.pass());
  }

  TEST_CASE("random 5-outcome pair: 1000 trials, zero violations") {
    SplitMix64 rng(3705);
    std::vector<std::string> outcomes = {"a", "b", "c", "d", "e"};
    HypothesisPair pair(outcomes, testutil::random_full_support_probs(rng, 5),
                        testutil::random_full_support_probs(rng, 5));
    LogOptimalityReport r = log_optimality_check(pair, 1000, 99);
    CHECK(r.n_trials == 1000);
    CHECK(r.violations == 0);
  }

  TEST_CASE("deterministic given the seed") {
    HypothesisPair pair = ab_pair(0.8, 0.2);
    LogOptimalityReport a = log_optimality_check(pair, 500, 1234);
    LogOptimalityReport b = log_optimality_check(pair, 500, 1234);
    CHECK(a.max_excess == b.max_excess);
    CHECK(a.kl == b.kl);
  }

  TEST_CASE("preconditions") {
    HypothesisPair gap({"a", "b"}, {1.0, 0.0}, {0.5, 0.5});
    CHECK_THROWS_AS(log_optimality_check(gap, 10, 0), std::domain_error);
    CHECK_THROWS_AS(log_optimality_check(ab_pair(0.5, 0.5), 0, 0), std::invalid_argument);
  }
}

TEST_SUITE("testing.p_uniformity") {
  TEST_CASE("grid p-variable is exactly uniform") {
    for (std::size_t n : {2u, 10u, 100u}) {
      UniformityReport r = p_uniformity_check(uniform_space(n), grid_p_variable(n), 10, 0.0);
      CHECK(r.superuniform);
      CHECK(r.exact_uniform);
      CHECK(r.max_gap == 0.0);
    }
  }

  TEST_CASE("Q = P: constant p-value 1, superuniform") {
    UniformityReport r = p_uniformity_check(ab_pair(0.5, 0.5));
    CHECK(r.superuniform);
    CHECK(r.achieved_cdf.size() == 1);
    CHECK(r.achieved_cdf[0].first == 1.0);
    CHECK(r.achieved_cdf[0].second == 1.0);
  }

  TEST_CASE("distinct LR atoms of equal mass give exact uniformity") {
    HypothesisPair pair({"a", "b", "c", "d"}, {0.25, 0.25, 0.25, 0.25},
                        {0.4, 0.3, 0.2, 0.1});
    UniformityReport r = p_uniformity_check(pair, 4, 0.0);
    CHECK(r.superuniform);
    CHECK(r.exact_uniform);
    REQUIRE(r.achieved_cdf.size() == 4);
    CHECK(r.achieved_cdf[0].first == 0.25);
    CHECK(r.achieved_cdf[3].first == 1.0);
  }

  TEST_CASE("a non-p-variable shows a positive gap") {
    UniformityReport r =
        p_uniformity_check(uniform_space(2), RandomVariable({0.1, 0.1}), 10);
    CHECK_FALSE(r.superuniform);
    CHECK(r.max_gap == doctest::Approx(0.9).epsilon(1e-12));
  }

  TEST_CASE("binned CDF covers the requested grid") {
    UniformityReport r = p_uniformity_check(uniform_space(10), grid_p_variable(10), 5);
    REQUIRE(r.bin_cdf.size() == 5);
    CHECK(r.bin_cdf[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(std::abs(r.bin_cdf[4] - 1.0) <= 1e-12);
  }

  TEST_CASE("np p-variables stay superuniform across random pairs") {
    SplitMix64 rng(3706);
    for (int trial = 0; trial < 200; ++trial) {
      auto sub = rng.fork(trial);
      const std::size_t n = 2 + sub.next_below(20);
      std::vector<std::string> outcomes;
      for (std::size_t i = 1; i <= n; ++i) outcomes.push_back("o" + std::to_string(i));
      HypothesisPair pair(outcomes, testutil::random_full_support_probs(sub, n),
                          testutil::random_full_support_probs(sub, n));
      UniformityReport r = p_uniformity_check(pair, 10, 0.0);
      CHECK(r.superuniform);
    }
  }
}
