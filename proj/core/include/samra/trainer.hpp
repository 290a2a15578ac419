#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "samra/env.hpp"
#include "samra/marl.hpp"

namespace samra::marl {

struct TrainOptions {
  int episodes = 500;       // learning episodes; 0 evaluates the initial policy only
  int eval_episodes = 0;    // greedy episodes after training
  std::ostream* trace = nullptr;  // NDJSON per-slot trace of the training episodes
  std::function<void(int, const env::EpisodeMetrics&)> on_episode;
};

struct TrainResult {
  std::unique_ptr<Learner> learner;
  std::vector<env::EpisodeMetrics> training;
  std::vector<env::EpisodeMetrics> evaluation;
  long env_steps = 0;
  Rng exploration_rng;
};

/// The environment variant an algorithm runs against (semantics off for DDPG_NO_SC).
env::EnvConfig env_config_for(Algorithm algorithm, env::EnvConfig config);

/// Episode seeds shared by all algorithms so paired runs see identical scenarios.
std::uint64_t episode_seed(std::uint64_t seed, int episode, bool evaluation);

/// Learns for the given number of episodes, one learner update per env step.
/// Throws std::invalid_argument for negative episode counts.
TrainResult train(Algorithm algorithm, const env::EnvConfig& env_config,
                  const LearnerConfig& learner_config, std::uint64_t seed,
                  const TrainOptions& options);

/// Greedy (noise-free) rollouts; the random policy stays random.
std::vector<env::EpisodeMetrics> evaluate_policy(const Learner& learner,
                                                 const env::EnvConfig& env_config,
                                                 std::uint64_t seed, int episodes,
                                                 std::ostream* trace = nullptr);

}  // namespace samra::marl
