#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "samra/mlp.hpp"
#include "samra/replay_buffer.hpp"
#include "samra/rng.hpp"

namespace samra::marl {

enum class Algorithm { kSamramarl, kDdpg, kTd3, kDdpgNoSc, kRandom };

/// Throws std::invalid_argument for an unknown id.
Algorithm parse_algorithm(std::string_view id);
std::string to_string(Algorithm algorithm);

struct LearnerConfig {
  std::vector<int> actor_hidden{1024, 512};
  std::vector<int> local_critic_hidden{1024, 512, 256};
  std::vector<int> global_critic_hidden{1024, 512, 256};
  double critic_learning_rate = 1e-3;
  double actor_learning_rate = 1e-4;
  double discount = 0.99;
  double soft_update_rate = 0.005;  // tau
  std::size_t buffer_capacity = 1'000'000;
  std::size_t batch_size = 64;
  std::size_t update_threshold = 64;  // updates start once size exceeds this
  int policy_delay = 2;               // d
  double exploration_std = 0.2;
  double local_critic_weight = 1.0;   // weight of the local term in the policy gradient
  bool local_critics_every_step = false;
  double smoothing_std = 0.2;   // TD3 target policy smoothing
  double smoothing_clip = 0.5;
  bool parallel_updates = false;
};

struct Dimensions {
  int agents = 1;
  int observation = 1;  // per agent
  int action = 1;       // per agent

  [[nodiscard]] int joint_observation() const { return agents * observation; }
  [[nodiscard]] int joint_action() const { return agents * action; }
};

struct UpdateStats {
  bool updated = false;
  bool policy_updated = false;
  double critic_loss = 0.0;
  std::vector<double> local_critic_losses;
  std::vector<double> actor_gradient_norms;
};

/// pi(s) + N(0, noise_std^2) per coordinate, clipped to [-1, 1].
Vector select_action(const Mlp& actor, const Vector& observation, double noise_std, Rng& rng,
                     Vector* pre_clip = nullptr);

/// y = r + gamma * not_terminal * min(q1, q2), elementwise.
Matrix twin_min_target(const Matrix& rewards, double discount, const Matrix& q1, const Matrix& q2,
                       const Matrix& not_terminal);
/// y = r + gamma * not_terminal * q, elementwise.
Matrix bootstrap_target(const Matrix& rewards, double discount, const Matrix& q,
                        const Matrix& not_terminal);

/// Common surface for every learner the environment drives.
class Learner {
 public:
  Learner(LearnerConfig config, Dimensions dims);
  virtual ~Learner() = default;
  Learner(const Learner&) = delete;
  Learner& operator=(const Learner&) = delete;

  [[nodiscard]] virtual Algorithm algorithm() const = 0;
  /// Raw per-agent actions in [-1, 1]^d.
  [[nodiscard]] virtual std::vector<std::vector<double>> act(
      const std::vector<std::vector<double>>& observations, double noise_std, Rng& rng) const = 0;
  void store(TransitionRecord record) { buffer_.push(std::move(record)); }
  /// One learning step; a no-op until the buffer exceeds the update threshold.
  virtual UpdateStats update(Rng& rng) = 0;

  /// Every parameter tensor in a fixed order, for checkpoints and audits.
  [[nodiscard]] virtual std::vector<std::pair<std::string, Mlp*>> networks() = 0;
  [[nodiscard]] std::vector<std::pair<std::string, const Mlp*>> networks() const;
  [[nodiscard]] bool all_finite() const;

  [[nodiscard]] const ReplayBuffer& buffer() const { return buffer_; }
  [[nodiscard]] const LearnerConfig& config() const { return config_; }
  [[nodiscard]] const Dimensions& dimensions() const { return dims_; }
  [[nodiscard]] long update_count() const { return update_count_; }

 protected:
  [[nodiscard]] bool ready() const { return buffer_.size() > config_.update_threshold; }

  LearnerConfig config_;
  Dimensions dims_;
  ReplayBuffer buffer_;
  long update_count_ = 0;
};

/// Per-agent actors and local critics with twin global critics.
class SamramarlLearner final : public Learner {
 public:
  SamramarlLearner(LearnerConfig config, Dimensions dims, Rng& init_rng);

  [[nodiscard]] Algorithm algorithm() const override { return Algorithm::kSamramarl; }
  [[nodiscard]] std::vector<std::vector<double>> act(
      const std::vector<std::vector<double>>& observations, double noise_std,
      Rng& rng) const override;
  UpdateStats update(Rng& rng) override;
  [[nodiscard]] std::vector<std::pair<std::string, Mlp*>> networks() override;

  /// Both global critics regress to the twin-min target. Returns the two losses.
  std::pair<double, double> global_critic_update(const Batch& batch);
  double local_critic_update(const Batch& batch, int agent);
  /// Gradient ascent on the summed global/local objective; returns the gradient norm.
  double actor_update(const Batch& batch, int agent);

  /// Mean over the batch of Q_g1(s, a) + w * Q_n(s_n, a_n) with a_n = pi_n(s_n).
  [[nodiscard]] double actor_objective(const Batch& batch, int agent) const;
  [[nodiscard]] MlpGradients actor_objective_gradient(const Batch& batch, int agent) const;
  /// Joint target actions pi'(s') for a batch of next states.
  [[nodiscard]] Matrix target_joint_actions(const Matrix& next_states) const;

  [[nodiscard]] Mlp& actor(int n) { return actors_.at(n); }
  [[nodiscard]] const Mlp& actor(int n) const { return actors_.at(n); }
  [[nodiscard]] Mlp& target_actor(int n) { return target_actors_.at(n); }
  [[nodiscard]] Mlp& local_critic(int n) { return local_critics_.at(n); }
  [[nodiscard]] Mlp& target_local_critic(int n) { return target_local_critics_.at(n); }
  [[nodiscard]] Mlp& global_critic(int j) { return global_critics_.at(j); }
  [[nodiscard]] Mlp& target_global_critic(int j) { return target_global_critics_.at(j); }

 private:
  [[nodiscard]] Matrix agent_rows(const Matrix& joint, int agent, int width) const;
  [[nodiscard]] Matrix critic_input(const Matrix& states, const Matrix& actions) const;
  void update_agent(const Batch& batch, int agent, bool policy_step, UpdateStats& stats);

  std::vector<Mlp> actors_, target_actors_;
  std::vector<Mlp> local_critics_, target_local_critics_;
  std::vector<Mlp> global_critics_, target_global_critics_;
  std::vector<Adam> actor_opt_, local_opt_, global_opt_;
};

/// Single centralised agent over the joint observation/action. DDPG uses one
/// critic and no delay; TD3 adds twin critics, target smoothing and delay.
class CentralizedLearner final : public Learner {
 public:
  CentralizedLearner(Algorithm algorithm, LearnerConfig config, Dimensions dims, Rng& init_rng);

  [[nodiscard]] Algorithm algorithm() const override { return algorithm_; }
  [[nodiscard]] std::vector<std::vector<double>> act(
      const std::vector<std::vector<double>>& observations, double noise_std,
      Rng& rng) const override;
  UpdateStats update(Rng& rng) override;
  [[nodiscard]] std::vector<std::pair<std::string, Mlp*>> networks() override;

  double critic_update(const Batch& batch, Rng& rng);
  double actor_update(const Batch& batch);

  [[nodiscard]] bool twin() const { return critics_.size() == 2; }
  [[nodiscard]] int delay() const { return delay_; }
  [[nodiscard]] Mlp& actor() { return actor_; }
  [[nodiscard]] Mlp& critic(int j) { return critics_.at(j); }
  [[nodiscard]] Mlp& target_critic(int j) { return target_critics_.at(j); }

 private:
  Algorithm algorithm_;
  int delay_ = 1;
  Mlp actor_, target_actor_;
  std::vector<Mlp> critics_, target_critics_;
  Adam actor_opt_;
  std::vector<Adam> critic_opt_;
};

/// Uniform random actions; never learns.
class RandomPolicy final : public Learner {
 public:
  RandomPolicy(LearnerConfig config, Dimensions dims);
  [[nodiscard]] Algorithm algorithm() const override { return Algorithm::kRandom; }
  [[nodiscard]] std::vector<std::vector<double>> act(
      const std::vector<std::vector<double>>& observations, double noise_std,
      Rng& rng) const override;
  UpdateStats update(Rng&) override { return {}; }
  [[nodiscard]] std::vector<std::pair<std::string, Mlp*>> networks() override { return {}; }
};

std::unique_ptr<Learner> make_learner(Algorithm algorithm, const LearnerConfig& config,
                                      Dimensions dims, Rng& init_rng);

/// Versioned structured-text dump of every network plus an RNG state.
void save_checkpoint(std::ostream& out, const Learner& learner, const Rng& rng);
/// Restores parameters into a learner of the same algorithm and shapes.
void load_checkpoint(std::istream& in, Learner& learner, Rng& rng);

}  // namespace samra::marl
