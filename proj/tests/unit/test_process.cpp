#include <gtest/gtest.h>

#include <cmath>

#include "emclab/errors.hpp"
#include "emclab/process.hpp"
#include "emclab/scenarios.hpp"
#include "testkit.hpp"

using namespace emclab;
using testkit::Gen;

namespace {

ProcessModel random_kth(Gen& g, std::size_t n, unsigned order) {
  std::size_t contexts = 1;
  for (unsigned i = 0; i < order; ++i) contexts *= n;
  std::vector<ProbDist> law;
  for (std::size_t c = 0; c < contexts; ++c) law.push_back(g.dist(n, 0.3));
  return ProcessModel::kth_order(StateSpace::indexed(n), order, law, g.dist(contexts, 0.3));
}

ProcessModel random_regime(Gen& g, std::size_t n, std::size_t regimes) {
  std::vector<StochasticMatrix> per;
  for (std::size_t r = 0; r < regimes; ++r) per.push_back(g.matrix(n, 0.3));
  return ProcessModel::regime_switch(StateSpace::indexed(n), g.dist(n), g.matrix(regimes, 0.2),
                                     g.dist(regimes), per);
}

std::vector<StochasticMatrix> random_slices(Gen& g, std::size_t n, std::size_t count) {
  std::vector<StochasticMatrix> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(g.matrix(n));
  return out;
}

std::vector<ProcessModel> random_models(Gen& g) {
  const std::size_t n = g.index(2, 4);
  std::vector<ProcessModel> out;
  out.push_back(ProcessModel::memoryless(StateSpace::indexed(n), g.dist(n), g.matrix(n, 0.3)));
  out.push_back(random_kth(g, n, static_cast<unsigned>(g.index(2, 3))));
  out.push_back(ProcessModel::reinforced(StateSpace::indexed(n), g.dist(n), g.matrix(n, 0.2),
                                         g.unit() * 3.0));
  out.push_back(random_regime(g, n, g.index(1, 3)));
  out.push_back(ProcessModel::markov_schedule(
      StateSpace::indexed(n), g.dist(n),
      MatrixSchedule::time_varying(random_slices(g, n, 8))));
  return out;
}

// Pr(next | observed history) for a regime model by summing over every
// hidden regime path.
std::vector<double> regime_brute(const RegimeSwitchParams& p, const std::vector<State>& h) {
  const std::size_t r = p.initial_regime.size();
  const std::size_t n = p.per_regime.front().size();
  const std::size_t len = h.size();
  std::vector<double> joint_next(n, 0.0);
  std::vector<std::size_t> path(len, 0);
  while (true) {
    // Regime z_0 .. z_{len-1}; transition X_t -> X_{t+1} uses regime z_t.
    double w = p.initial_regime[static_cast<State>(path[0])];
    for (std::size_t t = 0; t + 1 < len; ++t) {
      w *= p.per_regime[path[t]](h[t], h[t + 1]);
      w *= p.regime_chain(static_cast<State>(path[t]), static_cast<State>(path[t + 1]));
    }
    for (std::size_t b = 0; b < n; ++b) joint_next[b] += w * p.per_regime[path[len - 1]](h[len - 1], static_cast<State>(b));
    std::size_t pos = len;
    bool done = true;
    while (pos-- > 0) {
      if (++path[pos] < r) {
        done = false;
        break;
      }
      path[pos] = 0;
    }
    if (done) break;
  }
  double total = 0.0;
  for (double x : joint_next) total += x;
  if (!(total > 0.0)) return {};  // impossible history
  for (double& x : joint_next) x /= total;
  return joint_next;
}

}  // namespace

TEST(ProcessProperty, ConditionalLawsSumToOne) {
  testkit::for_all(40, 11, [](Gen& g, std::size_t) {
    for (const auto& m : random_models(g)) {
      for (int rep = 0; rep < 10; ++rep) {
        const auto h = g.history(m.size(), g.index(1, 7));
        const auto law = m.conditional_next(h);
        double total = 0.0;
        for (double x : law.weights()) {
          EXPECT_GE(x, 0.0);
          total += x;
        }
        EXPECT_NEAR(total, 1.0, 1e-9) << m.kind();
      }
    }
  });
}

TEST(ProcessProperty, MemorylessDependsOnlyOnLastState) {
  testkit::for_all(40, 12, [](Gen& g, std::size_t) {
    const std::size_t n = g.index(2, 5);
    const auto m = ProcessModel::memoryless(StateSpace::indexed(n), g.dist(n), g.matrix(n, 0.3));
    for (int rep = 0; rep < 10; ++rep) {
      auto h1 = g.history(n, g.index(1, 8));
      auto h2 = g.history(n, g.index(1, 8));
      h2.back() = h1.back();
      EXPECT_EQ(m.conditional_next(h1), m.conditional_next(h2));
    }
  });
}

TEST(ProcessProperty, ReinforcedWithZeroBetaIsMemoryless) {
  testkit::for_all(40, 13, [](Gen& g, std::size_t) {
    const std::size_t n = g.index(2, 5);
    const auto p = g.matrix(n, 0.3);
    const auto init = g.dist(n);
    const auto r = ProcessModel::reinforced(StateSpace::indexed(n), init, p, 0.0);
    const auto m = ProcessModel::memoryless(StateSpace::indexed(n), init, p);
    for (int rep = 0; rep < 10; ++rep) {
      const auto h = g.history(n, g.index(1, 8));
      EXPECT_LE(testkit::max_diff(testkit::to_vec(r.conditional_next(h)),
                                  testkit::to_vec(m.conditional_next(h))),
                1e-15);
    }
  });
}

TEST(ProcessProperty, RegimeFilterMatchesHiddenPathSum) {
  testkit::for_all(30, 14, [](Gen& g, std::size_t) {
    const auto m = random_regime(g, g.index(2, 3), g.index(1, 3));
    const auto& p = std::get<RegimeSwitchParams>(m.params());
    for (int rep = 0; rep < 5; ++rep) {
      const auto h = g.history(m.size(), g.index(1, 6));
      const auto ref = regime_brute(p, h);
      if (ref.empty()) continue;
      EXPECT_LE(testkit::max_diff(testkit::to_vec(m.conditional_next(h)), ref), 1e-12);
    }
  });
}

TEST(Process, KthOrderReadsContextTable) {
  const auto m = builtin_scenario("secondorder");
  // Context (0, 1): repeat 0 w.p. 0.9.
  EXPECT_DOUBLE_EQ(m.conditional_next(std::vector<State>{0, 1})[0], 0.9);
  EXPECT_DOUBLE_EQ(m.conditional_next(std::vector<State>{1, 1, 0, 1})[0], 0.9);
  EXPECT_DOUBLE_EQ(m.conditional_next(std::vector<State>{1, 1})[0], 0.1);
  // Shorter history: conditional of the initial pair law.
  EXPECT_DOUBLE_EQ(m.conditional_next(std::vector<State>{0})[1], 0.5);
  EXPECT_DOUBLE_EQ(m.initial()[0], 0.8);
}

TEST(Process, KthOrderStationaryStartIsUniformForSymmetricLaw) {
  const auto m = builtin_scenario("secondorder-stationary");
  const auto& k = std::get<KthOrderParams>(m.params());
  for (double x : k.initial_joint.weights()) EXPECT_NEAR(x, 0.25, 1e-12);
}

TEST(Process, ReinforcedWeightsVisits) {
  const auto m = builtin_scenario("reinforced");
  // History (0, 0): visits (2, 0), len 2 -> weights 0.7*2, 0.3*1.
  const auto law = m.conditional_next(std::vector<State>{0, 0});
  EXPECT_NEAR(law[0], 1.4 / 1.7, 1e-15);
}

TEST(Process, ConditionalNextRejectsBadHistory) {
  const auto m = builtin_scenario("markov2");
  EXPECT_THROW(m.conditional_next(std::vector<State>{}), ValidationError);
  EXPECT_THROW(m.conditional_next(std::vector<State>{0, 2}), ValidationError);
}

TEST(Process, BuildModelErrorsNameTheLocation) {
  auto expect_msg = [](const char* text, const char* needle) {
    try {
      build_model(nlohmann::json::parse(text));
      ADD_FAILURE() << "no error for " << text;
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_msg(R"({"kind":"memoryless","initial":[1,0],"transition":[[0.5,0.6],[1,0]]})", "transition");
  expect_msg(R"({"kind":"memoryless","initial":[0.5,0.6],"transition":[[0.5,0.5],[1,0]]})", "initial");
  expect_msg(R"({"kind":"warp","initial":[1]})", "warp");
  expect_msg(R"({"kind":"kth_order","num_states":2,"order":2,
                 "law":[{"context":[0,0],"next":[1,0]}],"initial_joint":"stationary"})",
             "missing context");
  expect_msg(R"({"kind":"memoryless","initial":"x","transition":[[1]]})", "initial");
}

TEST(Process, ModelJsonRoundTripPreservesFingerprint) {
  for (const char* name : {"markov2", "secondorder", "secondorder-stationary", "reinforced", "regime"}) {
    const auto m = builtin_scenario(name);
    const auto back = build_model(model_to_json(m));
    EXPECT_EQ(back.fingerprint(), m.fingerprint()) << name;
    EXPECT_EQ(m.fingerprint().size(), 16u);
  }
  EXPECT_NE(builtin_scenario("markov2").fingerprint(), builtin_scenario("reinforced").fingerprint());
}

TEST(Process, WithInitialKeepsKthOrderConditionals) {
  const auto m = builtin_scenario("secondorder");
  const auto moved = m.with_initial(ProbDist::strict({0.25, 0.75}));
  EXPECT_DOUBLE_EQ(moved.initial()[1], 0.75);
  // Given X_0 = 0 the second state is still split evenly.
  EXPECT_NEAR(moved.conditional_next(std::vector<State>{0})[1], 0.5, 1e-15);
}

TEST(Sampling, SeedDerivationIsFixed) {
  EXPECT_EQ(mix64(0), 0ULL);
  EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
  EXPECT_EQ(derive_seed(42, 7), mix64(42 + 0x9E3779B97F4A7C15ULL * 8));
}

TEST(Sampling, LongerHorizonExtendsSamePath) {
  const auto m = builtin_scenario("regime");
  const auto a = sample_trajectory(m, 30, 99);
  const auto b = sample_trajectory(m, 60, 99);
  ASSERT_EQ(a.length(), 31u);
  EXPECT_TRUE(std::equal(a.states.begin(), a.states.end(), b.states.begin()));
}

TEST(Sampling, EnsembleIndependentOfThreadCount) {
  for (const char* name : {"markov2", "secondorder", "reinforced", "regime"}) {
    const auto m = builtin_scenario(name);
    const auto one = sample_ensemble(m, 25, 300, 5, 1);
    const auto four = sample_ensemble(m, 25, 300, 5, 4);
    EXPECT_EQ(one, four) << name;
    EXPECT_EQ(ensemble_to_jsonl(one), ensemble_to_jsonl(four));
  }
}

TEST(Sampling, EnsembleJsonlRoundTrip) {
  const auto ens = sample_ensemble(builtin_scenario("regime"), 10, 50, 3);
  const auto back = ensemble_from_jsonl(ensemble_to_jsonl(ens));
  EXPECT_EQ(back, ens);
  EXPECT_THROW(ensemble_from_jsonl("{\"type\":\"header\"}\n"), ValidationError);
  EXPECT_THROW(ensemble_from_jsonl(""), ValidationError);
}

TEST(Sampling, EmpiricalStepFrequenciesMatchLaw) {
  // One-step frequencies from a fixed history agree with conditional_next.
  const auto m = builtin_scenario("markov2");
  std::size_t busy = 0;
  const std::size_t runs = 40000;
  for (std::size_t i = 0; i < runs; ++i) {
    busy += sample_trajectory(m, 1, derive_seed(11, i)).states[1];
  }
  EXPECT_NEAR(static_cast<double>(busy) / runs, 0.1, 4.0 * std::sqrt(0.09 / runs));
}
