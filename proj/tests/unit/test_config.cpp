#include <gtest/gtest.h>

#include <set>

#include "samra/config.hpp"

using namespace samra::harness;

TEST(Config, EmptyTextGivesDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.env.scenario.num_platoons, 4);
  EXPECT_EQ(c.env.scenario.platoon_size, 5);
  EXPECT_EQ(c.env.scenario.num_subchannels, 4);
  EXPECT_EQ(c.env.scenario.noise_power_dbm, -114.0);
  EXPECT_EQ(c.learner.batch_size, 64u);
  EXPECT_EQ(c.learner.discount, 0.99);
  EXPECT_EQ(c.learner.soft_update_rate, 0.005);
  EXPECT_EQ(c.run.episodes, 500);
  EXPECT_EQ(emit_config(c), emit_config(RunConfig{}));
}

TEST(Config, GapOutOfRange) {
  try {
    parse_config("platoon_gap = 50\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "scenario.platoon_gap");
  }
  EXPECT_EQ(parse_config("[scenario]\nplatoon_gap = 35\n").env.scenario.platoon_gap_m, 35.0);
}

TEST(Config, UnknownKeysAndBadValuesRejected) {
  EXPECT_THROW(parse_config("[scenario]\nwarp_drive = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[nowhere]\nseed = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nseed = many\n"), ConfigError);
  EXPECT_THROW(parse_config("[learner]\nbatch_size = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nalgorithm = PPO\n"), ConfigError);
  EXPECT_THROW(parse_config("[scenario]\nplatoon_gap = 10\nplatoon_gap = 12\n"), ConfigError);
}

TEST(Config, CommentsAndSectionsParse) {
  const auto c = parse_config(
      "; leading comment\n# another\n[run]\nseed = 9\nalgorithm = td3\n"
      "[learner]\nactor_hidden = 64, 32\n[scenario]\nbs_position = 100, 200\n");
  EXPECT_EQ(c.run.seed, 9u);
  EXPECT_EQ(c.run.algorithm, "TD3");
  EXPECT_EQ(c.learner.actor_hidden, (std::vector<int>{64, 32}));
  ASSERT_TRUE(c.env.scenario.bs_position.has_value());
  EXPECT_EQ(c.env.scenario.bs_position->y, 200.0);
}

TEST(Config, EmitParseRoundTrip) {
  RunConfig c;
  set_field(c, "scenario.platoon_gap", "12.5");
  set_field(c, "semantic.payload_max_suts", "5000");
  set_field(c, "env.semantic_aware", "false");
  set_field(c, "learner.critic_learning_rate", "0.000123456789");
  set_field(c, "learner.global_critic_hidden", "64, 64, 32");
  set_field(c, "sweep.values", "5, 10, 15");
  set_field(c, "run.seed", "77");
  set_field(c, "scenario.noise_power_dbm", "-110.1");
  const std::string text = emit_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(emit_config(back), text);
  for (const auto& f : config_fields()) {
    const std::string path = f.section + "." + f.key;
    EXPECT_EQ(get_field(back, path), get_field(c, path)) << path;
  }
  EXPECT_EQ(back.learner.critic_learning_rate, 0.000123456789);
}

TEST(Config, EveryFieldHasASource) {
  std::set<std::string> seen;
  for (const auto& f : config_fields()) {
    EXPECT_TRUE(seen.insert(f.section + "." + f.key).second) << f.key;
  }
  EXPECT_GT(seen.size(), 50u);
}

TEST(Config, HashesIgnoreSeedAndOutput) {
  RunConfig a, b;
  b.run.seed = 99;
  b.run.output_dir = "/elsewhere";
  b.run.deterministic = true;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.learner.actor_hidden = {8};
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(scenario_hash(a), scenario_hash(b));
  b.env.semantic_aware = false;
  EXPECT_EQ(scenario_hash(a), scenario_hash(b));
  b.env.scenario.platoon_gap_m = 30;
  EXPECT_NE(scenario_hash(a), scenario_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, CrossFieldValidation) {
  EXPECT_THROW(parse_config("[semantic]\npayload_min_suts = 5000\npayload_max_suts = 4000\n"),
               ConfigError);
  EXPECT_THROW(parse_config("[run]\neval_only = true\n"), ConfigError);
}
