#include "samra/trainer.hpp"

#include <stdexcept>

namespace samra::marl {

namespace {

std::vector<double> concat(const std::vector<std::vector<double>>& parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

env::EnvConfig env_config_for(Algorithm algorithm, env::EnvConfig config) {
  if (algorithm == Algorithm::kDdpgNoSc) config.semantic_aware = false;
  return config;
}

std::uint64_t episode_seed(std::uint64_t seed, int episode, bool evaluation) {
  return Rng::mix(Rng::mix(seed, evaluation ? 0xE7A1ULL : 0x7EA1ULL), static_cast<std::uint64_t>(episode));
}

TrainResult train(Algorithm algorithm, const env::EnvConfig& env_config,
                  const LearnerConfig& learner_config, std::uint64_t seed,
                  const TrainOptions& options) {
  if (options.episodes < 0) throw std::invalid_argument("train: episodes must be >= 0");
  if (options.eval_episodes < 0) throw std::invalid_argument("train: eval_episodes must be >= 0");
  const env::EnvConfig cfg = env_config_for(algorithm, env_config);
  env::Environment env(cfg);
  env.set_trace_sink(options.trace);

  Rng init_rng = Rng::derive(seed, "init");
  TrainResult result;
  result.learner = make_learner(
      algorithm, learner_config,
      Dimensions{env.num_agents(), env.observation_dim(), env.action_dim()}, init_rng);
  result.exploration_rng = Rng::derive(seed, "explore");
  Rng update_rng = Rng::derive(seed, "update");
  Learner& learner = *result.learner;

  for (int e = 0; e < options.episodes; ++e) {
    auto obs = env.reset(episode_seed(seed, e, false));
    bool done = false;
    while (!done) {
      auto raw = learner.act(obs, learner_config.exploration_std, result.exploration_rng);
      env::StepResult step = env.step_raw(raw);
      done = step.done;
      TransitionRecord rec;
      rec.state = concat(obs);
      rec.action = concat(raw);
      rec.local_rewards = step.local_rewards;
      rec.global_reward = step.global_reward;
      rec.next_state = concat(step.observations);
      rec.terminal = step.done;
      learner.store(std::move(rec));
      learner.update(update_rng);
      ++result.env_steps;
      obs = std::move(step.observations);
    }
    result.training.push_back(env.episode_metrics());
    if (options.on_episode) options.on_episode(e, result.training.back());
  }
  result.evaluation = evaluate_policy(learner, env_config, seed, options.eval_episodes);
  return result;
}

std::vector<env::EpisodeMetrics> evaluate_policy(const Learner& learner,
                                                 const env::EnvConfig& env_config,
                                                 std::uint64_t seed, int episodes,
                                                 std::ostream* trace) {
  if (episodes < 0) throw std::invalid_argument("evaluate_policy: episodes must be >= 0");
  env::Environment env(env_config_for(learner.algorithm(), env_config));
  env.set_trace_sink(trace);
  Rng rng = Rng::derive(seed, "eval");
  std::vector<env::EpisodeMetrics> out;
  for (int e = 0; e < episodes; ++e) {
    auto obs = env.reset(episode_seed(seed, e, true));
    bool done = false;
    while (!done) {
      auto step = env.step_raw(learner.act(obs, 0.0, rng));
      done = step.done;
      obs = std::move(step.observations);
    }
    out.push_back(env.episode_metrics());
  }
  return out;
}

}  // namespace samra::marl
