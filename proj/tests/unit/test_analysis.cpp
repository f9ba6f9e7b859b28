#include <gtest/gtest.h>

#include "emclab/analysis.hpp"
#include "emclab/errors.hpp"
#include "emclab/scenarios.hpp"
#include "testkit.hpp"

using namespace emclab;
using testkit::Gen;

TEST(Stationary, TwoStateClosedForm) {
  const auto pi = stationary(StochasticMatrix::from_rows({{0.9, 0.1}, {0.2, 0.8}}));
  EXPECT_NEAR(pi[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(pi[1], 1.0 / 3.0, 1e-12);
}

TEST(Stationary, ReducibleNamesClosedClasses) {
  const auto p = StochasticMatrix::from_rows({{1.0, 0.0, 0.0}, {0.5, 0.0, 0.5}, {0.0, 0.0, 1.0}});
  try {
    stationary(p);
    FAIL();
  } catch (const StructuralError& e) {
    EXPECT_NE(std::string(e.what()).find("{0}, {2}"), std::string::npos) << e.what();
  }
}

TEST(Stationary, PeriodicChainSolvedWithoutPowerCheck) {
  const auto res = stationary_detailed(StochasticMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}));
  EXPECT_FALSE(res.power_checked);
  EXPECT_NEAR(res.pi[0], 0.5, 1e-15);
}

TEST(StationaryProperty, MatchesIndependentSolve) {
  testkit::for_all(200, 41, [](Gen& g, std::size_t) {
    const auto p = g.primitive_matrix(g.index(1, 8));
    const auto res = stationary_detailed(p);
    EXPECT_LE(testkit::max_diff(testkit::to_vec(res.pi), testkit::stationary(testkit::to_mat(p))), 1e-10);
    EXPECT_LE(res.residual, 1e-12);
    EXPECT_TRUE(res.power_checked);
    EXPECT_LE(res.power_agreement, 1e-9);
  });
}

TEST(StationaryProperty, DoublyStochasticGivesUniform) {
  testkit::for_all(100, 42, [](Gen& g, std::size_t) {
    // Average of random permutation matrices plus the cycle keeps it irreducible.
    const std::size_t n = g.index(2, 7);
    testkit::Mat m(n, testkit::Vec(n, 0.0));
    for (std::size_t a = 0; a < n; ++a) m[a][(a + 1) % n] += 0.3;
    for (int k = 0; k < 3; ++k) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), g.engine());
      for (std::size_t a = 0; a < n; ++a) m[a][perm[a]] += 0.7 / 3.0;
    }
    const auto pi = stationary(StochasticMatrix::from_rows(m));
    for (double x : pi.weights()) EXPECT_NEAR(x, 1.0 / static_cast<double>(n), 1e-10);
  });
}

TEST(Structure, KnownShapes) {
  const auto pos = structure(StochasticMatrix::from_rows({{0.5, 0.5}, {0.3, 0.7}}));
  EXPECT_TRUE(pos.irreducible);
  EXPECT_TRUE(pos.aperiodic);
  EXPECT_EQ(pos.certificate, 1u);

  const auto id = structure(StochasticMatrix::identity(3));
  EXPECT_FALSE(id.irreducible);
  EXPECT_EQ(id.closed_classes.size(), 3u);
  EXPECT_FALSE(id.certificate);

  const auto cyc = structure(StochasticMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}));
  EXPECT_TRUE(cyc.irreducible);
  EXPECT_FALSE(cyc.aperiodic);
  EXPECT_EQ(cyc.periods, (std::vector<unsigned>{2, 2}));
  EXPECT_FALSE(cyc.primitive());

  // Transient state with no closed walk.
  const auto tr = structure(StochasticMatrix::from_rows({{0.0, 1.0}, {0.0, 1.0}}));
  EXPECT_EQ(tr.periods[0], 0u);
  EXPECT_EQ(tr.periods[1], 1u);
}

TEST(Structure, WielandtExtremeReachesBound) {
  // n = 4 Wielandt matrix: primitive with exponent (n-1)^2 + 1 = 10.
  const auto p = StochasticMatrix::from_rows(
      {{0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}, {0.5, 0.5, 0, 0}});
  const auto rep = structure(p);
  ASSERT_TRUE(rep.certificate);
  EXPECT_EQ(*rep.certificate, 10u);
}

TEST(StructureProperty, AgreesWithBooleanPowers) {
  testkit::for_all(300, 43, [](Gen& g, std::size_t) {
    const std::size_t n = g.index(1, 6);
    const auto p = g.matrix(n, 0.65);
    const auto m = testkit::to_mat(p);
    const auto rep = structure(p);
    EXPECT_EQ(rep.irreducible, testkit::strongly_connected(m));
    const std::size_t limit = 2 * n * n + 2;
    if (rep.irreducible) {
      for (std::size_t s = 0; s < n; ++s) EXPECT_EQ(rep.periods[s], testkit::period_of(m, s, limit));
    }
    const unsigned k = testkit::first_positive_power(m, (n - 1) * (n - 1) + 1);
    if (rep.irreducible && rep.aperiodic) {
      ASSERT_TRUE(rep.certificate);
      EXPECT_EQ(*rep.certificate, k);
      const auto pk = power(p, *rep.certificate);
      for (double x : pk.data()) EXPECT_GT(x, kPositiveThreshold);
    } else {
      EXPECT_FALSE(rep.certificate);
    }
  });
}

TEST(Convergence, ProfileIsNonIncreasingAndReachesLimit) {
  const auto p = StochasticMatrix::from_rows({{0.9, 0.1}, {0.2, 0.8}});
  const auto prof = convergence_profile(ProbDist::point(2, 0), p, 200);
  ASSERT_EQ(prof.rows.size(), 201u);
  for (std::size_t i = 1; i < prof.rows.size(); ++i) {
    EXPECT_LE(prof.rows[i].second, prof.rows[i - 1].second + 1e-15);
  }
  EXPECT_TRUE(prof.limit_reached);
  // TV decays like 0.7^t from 1/3.
  EXPECT_NEAR(prof.rows[1].second, (1.0 / 3.0) * 0.7, 1e-12);
  EXPECT_EQ(profile_csv(prof).substr(0, 5), "t,tv\n");
}

TEST(Convergence, RejectsPeriodicAndReducible) {
  EXPECT_THROW(convergence_profile(ProbDist::point(2, 0),
                                   StochasticMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}), 5),
               StructuralError);
  EXPECT_THROW(convergence_profile(ProbDist::point(2, 0), StochasticMatrix::identity(2), 5),
               StructuralError);
}

TEST(Theorem1, IdentityHoldsForStationaryKthOrder) {
  const auto chk = theorem1_identity_check(builtin_scenario("secondorder-stationary"), 8);
  EXPECT_TRUE(chk.passed);
  EXPECT_LE(chk.max_deviation, 1e-9);
}

TEST(Theorem1, RequiresHomogeneousSchedule) {
  EXPECT_THROW(theorem1_identity_check(builtin_scenario("reinforced"), 6), StructuralError);
}

TEST(Theorem1Property, HoldsForRandomStationaryKthOrder) {
  testkit::for_all(15, 44, [](Gen& g, std::size_t) {
    const std::size_t n = g.index(2, 3);
    std::vector<ProbDist> law;
    for (std::size_t c = 0; c < n * n; ++c) law.push_back(g.dist(n));
    const auto m = ProcessModel::kth_order(StateSpace::indexed(n), 2, law,
                                           stationary_prefix_joint(n, 2, law));
    const auto chk = theorem1_identity_check(m, 6);
    EXPECT_LE(chk.max_deviation, 1e-9);
  });
}
