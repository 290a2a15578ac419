#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "samra/env.hpp"
#include "samra/oracle.hpp"

using namespace samra;
using namespace samra::oracle;

namespace {

// N=2, K=2, one member per platoon; vehicles 0..3, BS is receiver 4.
StaticInstance small_instance(Rng& rng, bool symmetric = false) {
  StaticInstance inst;
  inst.num_agents = 2;
  inst.num_subchannels = 2;
  inst.platoons = {{0, 1}, {2, 3}};
  inst.channel = channel::ChannelRealization(2, 5, 2, 1e-13);
  for (int t = 0; t < 2; ++t) {
    for (int r = 0; r < 5; ++r) {
      for (int k = 0; k < 2; ++k) {
        const bool own = r == 2 * t + 1;
        double g = own ? 1e-9 : (r == 4 ? 1e-11 : 2e-10);
        if (!symmetric) g *= rng.uniform(0.2, 5.0);
        inst.channel.set_gain(t, r, k, g);
      }
    }
  }
  inst.profiles.assign(2, std::vector<semantics::QoEProfile>(2));
  if (!symmetric) {
    for (auto& platoon : inst.profiles) {
      for (auto& p : platoon) {
        p.rate_weight = rng.uniform();
        p.similarity_target = rng.uniform(0.8, 0.9);
      }
    }
  }
  inst.payload_suts = 4000.0;
  apply_default_grids(inst);
  return inst;
}

StaticInstance permuted(const StaticInstance& a) {
  StaticInstance b = a;
  std::swap(b.platoons[0], b.platoons[1]);
  std::swap(b.profiles[0], b.profiles[1]);
  for (int t = 0; t < 2; ++t)
    for (int r = 0; r < a.channel.num_receivers(); ++r)
      for (int k = 0; k < 2; ++k) b.channel.set_gain(1 - t, r, 1 - k, a.channel.gain(t, r, k));
  return b;
}

Assignment permuted(const Assignment& a) {
  Assignment b{a[1], a[0]};
  for (auto& x : b) x.subchannel = 1 - x.subchannel;
  return b;
}

env::EnvConfig tiny_env() {
  env::EnvConfig c;
  c.scenario.num_platoons = 2;
  c.scenario.num_subchannels = 2;
  c.scenario.platoon_size = 2;
  return c;
}

}  // namespace

TEST(Oracle, SmallScenarioSpaceSize) {
  Rng rng(1);
  const auto inst = small_instance(rng);
  EXPECT_EQ(agent_options(inst).size(), 64u);
  EXPECT_EQ(joint_space_size(inst), 4096u);
}

TEST(Oracle, SingletonSpace) {
  Rng rng(2);
  StaticInstance inst = small_instance(rng);
  inst.num_agents = 1;
  inst.num_subchannels = 1;
  inst.platoons = {{0, 1}};
  inst.profiles.resize(1);
  channel::ChannelRealization ch(1, 3, 1, 1e-13);
  ch.set_gain(0, 1, 0, 1e-9);
  ch.set_gain(0, 2, 0, 1e-11);
  inst.channel = ch;
  inst.power_levels = {1.0};
  inst.u_text_levels = {10};
  inst.u_image_levels = {10};
  const auto options = agent_options(inst);
  const auto best = enumerate_optimum(inst);
  EXPECT_EQ(best.evaluated, options.size());
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& o : options) top = std::max(top, evaluate_objective(inst, {o}).total);
  EXPECT_EQ(best.breakdown.total, top);
}

TEST(Oracle, SymmetricInstanceUsesDistinctSubchannels) {
  Rng rng(3);
  const auto inst = small_instance(rng, true);
  const auto best = enumerate_optimum(inst);
  EXPECT_NE(best.assignment[0].subchannel, best.assignment[1].subchannel);
  EXPECT_FALSE(best.breakdown.violations.shared_subchannel);
}

TEST(Oracle, DominatesRandomAssignments) {
  Rng rng(4);
  const auto inst = small_instance(rng);
  const auto best = enumerate_optimum(inst);
  EXPECT_EQ(best.evaluated, joint_space_size(inst));
  for (int i = 0; i < 1000; ++i) {
    ASSERT_LE(evaluate_objective(inst, random_assignment(inst, rng)).total,
              best.breakdown.total);
  }
}

TEST(Oracle, ThreadedSearchMatchesSerial) {
  Rng rng(5);
  const auto inst = small_instance(rng);
  const auto a = enumerate_optimum(inst, 1);
  const auto b = enumerate_optimum(inst, 3);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.breakdown.total, b.breakdown.total);
}

TEST(Oracle, CapRejectsLargeSpaces) {
  Rng rng(6);
  auto inst = small_instance(rng);
  inst.enumeration_cap = 100;
  EXPECT_THROW(enumerate_optimum(inst), std::length_error);
}

TEST(Oracle, DistinctChannelsBeatSharedOnes) {
  Rng rng(7);
  const auto inst = small_instance(rng, true);
  const auto options = agent_options(inst);
  for (const auto& o : options) {
    if (!o.v2v) continue;
    Assignment shared{o, o}, split{o, o};
    split[1].subchannel = 1 - o.subchannel;
    ASSERT_GE(evaluate_objective(inst, split).total, evaluate_objective(inst, shared).total);
  }
}

TEST(Oracle, ZeroPowerIsFinite) {
  Rng rng(8);
  const auto inst = small_instance(rng);
  Assignment a = random_assignment(inst, rng);
  for (auto& x : a) x.text_power_w = x.image_power_w = 0.0;
  const auto b = evaluate_objective(inst, a);
  EXPECT_TRUE(std::isfinite(b.total));
  EXPECT_NEAR(b.total, b.recompute(), 1e-12);
}

TEST(Oracle, DoublingLambdaDoublesLogisticComponent) {
  Rng rng(9);
  auto inst = small_instance(rng);
  const auto a = random_assignment(inst, rng);
  const auto one = evaluate_objective(inst, a);
  inst.semantic.objective_weight *= 2.0;
  const auto two = evaluate_objective(inst, a);
  EXPECT_EQ(two.qoe_sum(), one.qoe_sum());
  EXPECT_EQ(two.total - two.qoe_sum(), 2.0 * (one.total - one.qoe_sum()));
}

TEST(Oracle, OffGridValuesRejected) {
  Rng rng(10);
  const auto inst = small_instance(rng);
  auto a = random_assignment(inst, rng);
  a[0].text_power_w = 0.123;
  EXPECT_THROW(evaluate_objective(inst, a), std::invalid_argument);
  a = random_assignment(inst, rng);
  a.pop_back();
  EXPECT_THROW(evaluate_objective(inst, a), std::invalid_argument);
}

TEST(Oracle, PermutationEquivariance) {
  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    const auto inst = small_instance(rng);
    const auto best = enumerate_optimum(inst);
    const auto pinst = permuted(inst);
    const auto pbest = enumerate_optimum(pinst);
    EXPECT_NEAR(pbest.breakdown.total, best.breakdown.total, 1e-9);
    EXPECT_NEAR(evaluate_objective(pinst, permuted(best.assignment)).total, best.breakdown.total,
                1e-9);
  }
}

TEST(Oracle, AgreesWithEnvironmentSlot) {
  for (auto cfg : {tiny_env(), env::EnvConfig{}}) {
    for (bool aware : {true, false}) {
      cfg.semantic_aware = aware;
      env::Environment env(cfg);
      env.reset(21);
      const auto inst = freeze_instance(env);
      Rng rng(22);
      for (int i = 0; i < 50; ++i) {
        const auto a = random_assignment(inst, rng);
        const auto slot = env.evaluate_slot(a);
        const auto b = evaluate_objective(inst, a);
        ASSERT_NEAR(b.total, slot.objective(cfg.semantic.objective_weight), 1e-9);
        for (int n = 0; n < env.num_agents(); ++n) {
          ASSERT_NEAR(b.platoon_qoe[n], slot.platoons[n].qoe, 1e-9);
        }
      }
    }
  }
}

TEST(Relaxation, BinaryBetaHasNoGap) {
  Rng rng(12);
  const auto inst = small_instance(rng);
  const auto a = random_assignment(inst, rng);
  std::vector<std::vector<double>> beta(2, std::vector<double>(2, 0.0));
  for (int n = 0; n < 2; ++n) beta[n][a[n].subchannel] = 1.0;
  const auto report = relaxation_gap(inst, a, beta);
  EXPECT_NEAR(report.gap, 0.0, 1e-12);
  EXPECT_NEAR(report.thresholded, evaluate_objective(inst, a).total, 1e-12);
  EXPECT_EQ(report.subchannels[0], a[0].subchannel);
}

TEST(Relaxation, ThresholdTieBreaks) {
  const std::vector<std::vector<double>> uniform(3, std::vector<double>(4, 0.25));
  for (int k : threshold_beta(uniform, ThresholdRule::kArgmax)) EXPECT_EQ(k, 0);
  EXPECT_EQ(threshold_beta({{0.1, 0.6, 0.3}}, ThresholdRule::kHalf)[0], 1);
  EXPECT_EQ(threshold_beta({{0.2, 0.3, 0.5}}, ThresholdRule::kHalf)[0], 2);
  EXPECT_EQ(threshold_beta({{0.2, 0.45, 0.35}}, ThresholdRule::kHalf)[0], 1);
}

TEST(InstanceIo, JsonRoundTrip) {
  Rng rng(13);
  const auto inst = small_instance(rng);
  const auto back = instance_from_json(to_json(inst));
  EXPECT_TRUE(back.channel == inst.channel);
  const auto a = random_assignment(inst, rng);
  EXPECT_EQ(evaluate_objective(back, a).total, evaluate_objective(inst, a).total);
  EXPECT_EQ(assignment_from_json(to_json(a)), a);

  const auto path = std::filesystem::temp_directory_path() / "samra_test_instance.json";
  save_instance(path, inst);
  const auto loaded = load_instance(path);
  EXPECT_EQ(evaluate_objective(loaded, a).total, evaluate_objective(inst, a).total);
  std::filesystem::remove(path);
}

TEST(InstanceIo, RejectsForeignDocuments) {
  EXPECT_THROW(instance_from_json(nlohmann::json{{"format", "other"}}), std::exception);
}
