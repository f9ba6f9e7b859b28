#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "emclab/core.hpp"
#include "emclab/errors.hpp"
#include "emclab/io.hpp"
#include "testkit.hpp"

using namespace emclab;
using testkit::Gen;

TEST(StateSpace, RejectsEmptyAndDuplicates) {
  EXPECT_THROW(StateSpace(std::vector<std::string>{}), ValidationError);
  EXPECT_THROW(StateSpace({"a", "b", "a"}), ValidationError);
  const StateSpace s({"idle", "busy"});
  EXPECT_EQ(s.index_of("busy"), 1u);
  EXPECT_EQ(s.label(0), "idle");
  EXPECT_THROW(s.index_of("nope"), ValidationError);
  EXPECT_THROW(s.label(2), ValidationError);
  EXPECT_EQ(StateSpace::indexed(3).label(2), "2");
}

TEST(ProbDist, NormalizeScalesWeights) {
  const std::vector<double> w{2.0, 6.0};
  const auto d = make_dist(w);
  EXPECT_DOUBLE_EQ(d[0], 0.25);
  EXPECT_DOUBLE_EQ(d[1], 0.75);
}

TEST(ProbDist, NormalizeRejectsBadWeightsNamingIndex) {
  const std::vector<double> neg{0.5, -0.1, 0.6};
  try {
    make_dist(neg);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("index 1"), std::string::npos) << e.what();
  }
  const std::vector<double> nan{0.5, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(make_dist(nan), ValidationError);
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_THROW(make_dist(zero), ValidationError);
  EXPECT_THROW(make_dist(std::vector<double>{}), ValidationError);
}

TEST(ProbDist, StrictRequiresUnitSum) {
  EXPECT_NO_THROW(ProbDist::strict({0.3, 0.7}));
  EXPECT_THROW(ProbDist::strict({0.3, 0.6}), ValidationError);
  EXPECT_THROW(ProbDist::strict({1.2, -0.2}), ValidationError);
}

TEST(StochasticMatrix, StrictChecksShapeAndRows) {
  EXPECT_THROW(StochasticMatrix::strict(2, {0.5, 0.5, 1.0}), ValidationError);
  EXPECT_THROW(StochasticMatrix::from_rows({{0.5, 0.5}, {0.6, 0.6}}), ValidationError);
  EXPECT_THROW(StochasticMatrix::from_rows({{0.5, 0.5}, {1.0}}), ValidationError);
  const auto p = StochasticMatrix::from_rows({{0.9, 0.1}, {0.2, 0.8}});
  EXPECT_DOUBLE_EQ(p(1, 0), 0.2);
  EXPECT_EQ(p.row(0).size(), 2u);
}

TEST(Distances, TotalVariation) {
  const auto p = ProbDist::strict({1.0, 0.0});
  const auto q = ProbDist::strict({0.0, 1.0});
  EXPECT_DOUBLE_EQ(tv_distance(p, q), 1.0);
  EXPECT_DOUBLE_EQ(tv_distance(p, p), 0.0);
  EXPECT_THROW(tv_distance(p, ProbDist::uniform(3)), ValidationError);
}

TEST(Schedule, HomogeneousAndTimeVarying) {
  const auto p = StochasticMatrix::from_rows({{0.9, 0.1}, {0.2, 0.8}});
  const auto h = MatrixSchedule::homogeneous(p);
  EXPECT_TRUE(h.is_homogeneous());
  EXPECT_EQ(h.at(1000), p);
  EXPECT_TRUE(h.covers(1u << 20));
  const auto tv = MatrixSchedule::time_varying({p, StochasticMatrix::identity(2)});
  EXPECT_FALSE(tv.is_homogeneous());
  EXPECT_EQ(tv.at(1), StochasticMatrix::identity(2));
  EXPECT_THROW(tv.at(2), ValidationError);
  EXPECT_TRUE(tv.covers(2));
  EXPECT_FALSE(tv.covers(3));
  EXPECT_THROW(MatrixSchedule::time_varying({p, StochasticMatrix::identity(3)}), ValidationError);
}

TEST(Trajectory, ValidationNamesModule) {
  try {
    validate_trajectory(Trajectory{{0, 3}, 0}, 2, "unit");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.module(), "unit");
  }
}

// Properties over random inputs.

TEST(CoreProperty, ApplyPreservesMassAndMatchesReference) {
  testkit::for_all(200, 1, [](Gen& g, std::size_t) {
    const std::size_t n = g.index(1, 6);
    const auto p = g.matrix(n, 0.3);
    const auto d = g.dist(n, 0.3);
    const auto out = apply(d, p);
    double total = 0.0;
    for (double x : out.weights()) total += x;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_LE(testkit::max_diff(testkit::to_vec(out), testkit::step(testkit::to_vec(d), testkit::to_mat(p))),
              1e-14);
  });
}

TEST(CoreProperty, PowerMatchesRepeatedMultiplication) {
  testkit::for_all(100, 2, [](Gen& g, std::size_t) {
    const std::size_t n = g.index(1, 5);
    const auto p = g.matrix(n, 0.4);
    const unsigned k = static_cast<unsigned>(g.index(0, 9));
    testkit::Mat ref(n, testkit::Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) ref[i][i] = 1.0;
    for (unsigned i = 0; i < k; ++i) ref = testkit::matmul(ref, testkit::to_mat(p));
    EXPECT_LE(testkit::max_diff(testkit::to_mat(power(p, k)), ref), 1e-13);
  });
}

TEST(CoreProperty, TvIsSymmetricAndBounded) {
  testkit::for_all(200, 3, [](Gen& g, std::size_t) {
    const std::size_t n = g.index(1, 7);
    const auto p = g.dist(n, 0.3);
    const auto q = g.dist(n, 0.3);
    const double d = tv_distance(p, q);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_DOUBLE_EQ(d, tv_distance(q, p));
  });
}

TEST(CoreProperty, MatrixJsonRoundTrip) {
  testkit::for_all(50, 4, [](Gen& g, std::size_t) {
    const std::size_t n = g.index(1, 5);
    const auto p = g.matrix(n, 0.3);
    const auto space = StateSpace::indexed(n);
    const auto back = matrix_from_json(nlohmann::json::parse(matrix_to_json(space, p).dump()));
    EXPECT_EQ(back.matrix, p);
    EXPECT_EQ(back.space, space);
  });
}

TEST(Io, MatrixFromJsonRejectsBadRows) {
  EXPECT_THROW(matrix_from_json(nlohmann::json::parse(R"({"rows": [[0.5, 0.6], [1, 0]]})")),
               ValidationError);
  EXPECT_THROW(matrix_from_json(nlohmann::json::parse(R"({"rows": [["x", 1], [1, 0]]})")),
               ValidationError);
  EXPECT_THROW(parse_json("{not json", "test"), ValidationError);
}

TEST(Io, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 2.0 / 3.0, 1e-300, 0.0}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}
