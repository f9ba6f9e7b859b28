#include <gtest/gtest.h>

#include "emclab/analysis.hpp"
#include "emclab/censoring.hpp"
#include "emclab/emc_chain.hpp"
#include "emclab/errors.hpp"
#include "emclab/scenarios.hpp"
#include "testkit.hpp"

using namespace emclab;
using testkit::Gen;

namespace {

std::vector<std::vector<State>> subsets(std::size_t n) {
  std::vector<std::vector<State>> out;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<State> s;
    for (State i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) s.push_back(i);
    out.push_back(s);
  }
  return out;
}

// A 3-state order-2 law whose contexts sharing a last state disagree.
ProcessModel three_state_second_order() {
  std::vector<ProbDist> law;
  const double table[9][3] = {{0.6, 0.3, 0.1}, {0.1, 0.7, 0.2}, {0.3, 0.2, 0.5},
                              {0.2, 0.2, 0.6}, {0.5, 0.4, 0.1}, {0.1, 0.1, 0.8},
                              {0.7, 0.1, 0.2}, {0.3, 0.6, 0.1}, {0.2, 0.5, 0.3}};
  for (const auto& row : table) law.push_back(ProbDist::strict({row[0], row[1], row[2]}));
  return ProcessModel::kth_order(StateSpace({"a", "b", "c"}), 2, law,
                                 stationary_prefix_joint(3, 2, law));
}

}  // namespace

TEST(CensorSet, Validation) {
  EXPECT_THROW(CensorSet({}, 3), ValidationError);
  EXPECT_THROW(CensorSet({0, 0}, 3), ValidationError);
  EXPECT_THROW(CensorSet({3}, 3), ValidationError);
  const CensorSet a({2, 0}, 3);
  EXPECT_EQ(a.members(), (std::vector<State>{0, 2}));
  EXPECT_EQ(a.complement(), (std::vector<State>{1}));
  EXPECT_THROW(CensorSet::from_labels({"x"}, StateSpace({"a", "b"})), ValidationError);
}

TEST(Hits, ExtractsPositionsInA) {
  const auto hits = a_hits(Trajectory{{1, 0, 2, 1, 0}, 10}, CensorSet({0, 2}, 3));
  EXPECT_EQ(hits.times, (std::vector<std::size_t>{11, 12, 14}));
  EXPECT_EQ(hits.states, (std::vector<State>{0, 2, 0}));
}

TEST(Censoring, ConditionalOn) {
  const auto pi = ProbDist::strict({0.2, 0.3, 0.5});
  const auto pa = conditional_on(pi, CensorSet({0, 2}, 3));
  EXPECT_NEAR(pa[0], 0.2 / 0.7, 1e-15);
  EXPECT_EQ(pa[1], 0.0);
  EXPECT_THROW(conditional_on(ProbDist::strict({0.0, 1.0}), CensorSet({0}, 2)), ValidationError);
}

TEST(Censoring, SingularComplementIsStructural) {
  // State 2 is absorbing and outside A.
  const auto p = StochasticMatrix::from_rows({{0.5, 0.25, 0.25}, {0.5, 0.5, 0.0}, {0.0, 0.0, 1.0}});
  EXPECT_THROW(censored_matrix(p, CensorSet({0, 1}, 3)), StructuralError);
}

TEST(Censoring, FullSetReturnsMatrix) {
  const auto p = StochasticMatrix::from_rows({{0.9, 0.1}, {0.2, 0.8}});
  EXPECT_EQ(censored_matrix(p, CensorSet({0, 1}, 2)).matrix, p);
}

TEST(CensoringProperty, MatchesSeriesAndPreservesStationarity) {
  testkit::for_all(60, 51, [](Gen& g, std::size_t) {
    const std::size_t n = g.index(2, 5);
    const auto p = g.primitive_matrix(n, 0.5);
    const auto pi = stationary(p);
    for (const auto& members : subsets(n)) {
      const CensorSet a(members, n);
      const auto c = censored_matrix(p, a);
      EXPECT_LE(testkit::max_diff(testkit::to_mat(c.matrix),
                                  testkit::censored_by_series(testkit::to_mat(p), members)),
                1e-10);
      const auto pi_a = conditional_on(pi, a);
      EXPECT_LE(max_abs_diff(embed(stationary(c.matrix), a).weights(), pi_a.weights()), 1e-9);
      for (const auto& hit : exact_hit_distributions(p, a, pi_a, 11)) {
        EXPECT_LE(max_abs_diff(hit.weights(), pi_a.weights()), 1e-9);
      }
    }
  });
}

TEST(CensoringProperty, ExactHitLawsFromOtherStartsAreDistributions) {
  testkit::for_all(30, 52, [](Gen& g, std::size_t) {
    const std::size_t n = g.index(2, 4);
    const auto p = g.primitive_matrix(n);
    const CensorSet a({0}, n);
    for (const auto& d : exact_hit_distributions(p, a, ProbDist::point(n, 0), 4)) {
      EXPECT_DOUBLE_EQ(d[0], 1.0);
    }
  });
}

TEST(HitCheck, MarkovParentIncludesExactRows) {
  HitCheckOptions opt;
  opt.samples = 20000;
  opt.seed = 7;
  const auto rep = a_hit_distribution_check(builtin_scenario("markov2"), CensorSet({1}, 2), opt);
  EXPECT_TRUE(rep.markov_parent);
  ASSERT_EQ(rep.per_hit.size(), 5u);
  for (const auto& row : rep.per_hit) {
    ASSERT_TRUE(row.exact_tv);
    EXPECT_LE(*row.exact_tv, 1e-12);
    EXPECT_EQ(row.n_effective + rep.rejected, 20000u);
  }
}

TEST(HitCheck, NonMarkovThreeStateSecondOrder) {
  const auto m = three_state_second_order();
  ASSERT_TRUE(build_emc(m, 6).schedule.is_homogeneous());
  HitCheckOptions opt;
  opt.samples = 50000;
  opt.seed = 11;
  for (const auto& members : {std::vector<State>{0, 1}, std::vector<State>{1, 2}, std::vector<State>{0, 2}}) {
    const auto rep = a_hit_distribution_check(m, CensorSet(members, 3), opt);
    EXPECT_FALSE(rep.markov_parent);
    EXPECT_TRUE(rep.passed) << rep.max_tv << " > " << rep.tolerance;
    EXPECT_LE(rep.max_tv, 0.02);
  }
}

TEST(HitCheck, DeterministicAcrossThreads) {
  HitCheckOptions opt;
  opt.samples = 5000;
  opt.seed = 3;
  const auto m = three_state_second_order();
  const auto one = a_hit_distribution_check(m, CensorSet({0, 1}, 3), opt);
  opt.threads = 3;
  const auto three = a_hit_distribution_check(m, CensorSet({0, 1}, 3), opt);
  ASSERT_EQ(one.per_hit.size(), three.per_hit.size());
  for (std::size_t k = 0; k < one.per_hit.size(); ++k) EXPECT_EQ(one.per_hit[k].tv, three.per_hit[k].tv);
}

TEST(HitCheck, RejectsTimeVaryingParent) {
  EXPECT_THROW(a_hit_distribution_check(builtin_scenario("reinforced"), CensorSet({0}, 2)),
               StructuralError);
}
