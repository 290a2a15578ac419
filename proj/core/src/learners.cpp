#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <stdexcept>
#include <string>

#include "samra/marl.hpp"

namespace samra::marl {

namespace {

std::vector<int> with_ends(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

double mse_upstream(const Matrix& q, const Matrix& y, Matrix& upstream) {
  const double b = static_cast<double>(q.cols());
  const Matrix diff = q - y;
  upstream = 2.0 * diff / b;
  return diff.squaredNorm() / b;
}

MlpGradients negated(MlpGradients g) {
  for (auto& l : g.layers) {
    l.weight = -l.weight;
    l.bias = -l.bias;
  }
  g.input = -g.input;
  return g;
}

template <typename F>
void run_all(int count, bool parallel, F&& fn) {
  if (!parallel || count < 2) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> jobs;
  jobs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) jobs.push_back(std::async(std::launch::async, [&fn, i] { fn(i); }));
  for (auto& j : jobs) j.get();
}

void check_dims(const Dimensions& d) {
  if (d.agents < 1 || d.observation < 1 || d.action < 1) {
    throw std::invalid_argument("learner: dimensions must be positive");
  }
}

void check_config(const LearnerConfig& c) {
  if (c.batch_size < 1) throw std::invalid_argument("learner: batch_size must be positive");
  if (c.policy_delay < 1) throw std::invalid_argument("learner: policy_delay must be >= 1");
  if (!(c.soft_update_rate > 0.0 && c.soft_update_rate <= 1.0)) {
    throw std::invalid_argument("learner: soft_update_rate must lie in (0, 1]");
  }
  if (!(c.discount >= 0.0 && c.discount <= 1.0)) {
    throw std::invalid_argument("learner: discount must lie in [0, 1]");
  }
  if (!(c.actor_learning_rate >= 0.0) || !(c.critic_learning_rate >= 0.0)) {
    throw std::invalid_argument("learner: learning rates must be >= 0");
  }
}

}  // namespace

Algorithm parse_algorithm(std::string_view id) {
  std::string s(id);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "SAMRAMARL") return Algorithm::kSamramarl;
  if (s == "DDPG") return Algorithm::kDdpg;
  if (s == "TD3") return Algorithm::kTd3;
  if (s == "DDPG_NO_SC") return Algorithm::kDdpgNoSc;
  if (s == "RANDOM") return Algorithm::kRandom;
  throw std::invalid_argument("unknown algorithm '" + std::string(id) +
                              "' (expected SAMRAMARL, DDPG, TD3, DDPG_NO_SC or RANDOM)");
}

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kSamramarl: return "SAMRAMARL";
    case Algorithm::kDdpg: return "DDPG";
    case Algorithm::kTd3: return "TD3";
    case Algorithm::kDdpgNoSc: return "DDPG_NO_SC";
    case Algorithm::kRandom: return "RANDOM";
  }
  return "?";
}

Vector select_action(const Mlp& actor, const Vector& observation, double noise_std, Rng& rng,
                     Vector* pre_clip) {
  Vector a = actor.forward(observation);
  if (noise_std > 0.0) {
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) += rng.normal(0.0, noise_std);
  }
  if (pre_clip != nullptr) *pre_clip = a;
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

Matrix twin_min_target(const Matrix& rewards, double discount, const Matrix& q1, const Matrix& q2,
                       const Matrix& not_terminal) {
  return bootstrap_target(rewards, discount, q1.cwiseMin(q2), not_terminal);
}

Matrix bootstrap_target(const Matrix& rewards, double discount, const Matrix& q,
                        const Matrix& not_terminal) {
  if (rewards.cols() != q.cols() || not_terminal.cols() != q.cols()) {
    throw std::invalid_argument("bootstrap_target: batch sizes differ");
  }
  return (rewards.array() + discount * not_terminal.array() * q.array()).matrix();
}

Learner::Learner(LearnerConfig config, Dimensions dims)
    : config_(std::move(config)), dims_(dims), buffer_(std::max<std::size_t>(config_.buffer_capacity, 1)) {
  check_dims(dims_);
  check_config(config_);
}

std::vector<std::pair<std::string, const Mlp*>> Learner::networks() const {
  auto mutable_nets = const_cast<Learner*>(this)->networks();
  std::vector<std::pair<std::string, const Mlp*>> out;
  out.reserve(mutable_nets.size());
  for (auto& [name, net] : mutable_nets) out.emplace_back(name, net);
  return out;
}

bool Learner::all_finite() const {
  for (const auto& [name, net] : networks()) {
    if (!net->all_finite()) return false;
  }
  return true;
}

// ---- SAMRAMARL

SamramarlLearner::SamramarlLearner(LearnerConfig config, Dimensions dims, Rng& init_rng)
    : Learner(std::move(config), dims) {
  const int n = dims_.agents;
  const int obs = dims_.observation;
  const int act = dims_.action;
  for (int i = 0; i < n; ++i) {
    actors_.emplace_back(with_ends(obs, config_.actor_hidden, act), Activation::kRelu,
                         Activation::kTanh, init_rng);
    local_critics_.emplace_back(with_ends(obs + act, config_.local_critic_hidden, 1),
                                Activation::kRelu, Activation::kIdentity, init_rng);
  }
  for (int j = 0; j < 2; ++j) {
    global_critics_.emplace_back(
        with_ends(dims_.joint_observation() + dims_.joint_action(), config_.global_critic_hidden, 1),
        Activation::kRelu, Activation::kIdentity, init_rng);
  }
  target_actors_ = actors_;
  target_local_critics_ = local_critics_;
  target_global_critics_ = global_critics_;
  for (const auto& a : actors_) actor_opt_.emplace_back(a, config_.actor_learning_rate);
  for (const auto& c : local_critics_) local_opt_.emplace_back(c, config_.critic_learning_rate);
  for (const auto& c : global_critics_) global_opt_.emplace_back(c, config_.critic_learning_rate);
}

std::vector<std::vector<double>> SamramarlLearner::act(
    const std::vector<std::vector<double>>& observations, double noise_std, Rng& rng) const {
  if (static_cast<int>(observations.size()) != dims_.agents) {
    throw std::invalid_argument("act: expected one observation per agent");
  }
  std::vector<std::vector<double>> out;
  for (int n = 0; n < dims_.agents; ++n) {
    const auto& o = observations[static_cast<std::size_t>(n)];
    if (static_cast<int>(o.size()) != dims_.observation) {
      throw std::invalid_argument("act: observation has the wrong size");
    }
    const Vector v = Eigen::Map<const Vector>(o.data(), static_cast<Eigen::Index>(o.size()));
    const Vector a = select_action(actors_[static_cast<std::size_t>(n)], v, noise_std, rng);
    out.emplace_back(a.data(), a.data() + a.size());
  }
  return out;
}

Matrix SamramarlLearner::agent_rows(const Matrix& joint, int agent, int width) const {
  return joint.middleRows(static_cast<Eigen::Index>(agent) * width, width);
}

Matrix SamramarlLearner::critic_input(const Matrix& states, const Matrix& actions) const {
  Matrix in(states.rows() + actions.rows(), states.cols());
  in.topRows(states.rows()) = states;
  in.bottomRows(actions.rows()) = actions;
  return in;
}

Matrix SamramarlLearner::target_joint_actions(const Matrix& next_states) const {
  Matrix a(dims_.joint_action(), next_states.cols());
  for (int n = 0; n < dims_.agents; ++n) {
    a.middleRows(static_cast<Eigen::Index>(n) * dims_.action, dims_.action) =
        target_actors_[static_cast<std::size_t>(n)].forward(agent_rows(next_states, n, dims_.observation));
  }
  return a;
}

std::pair<double, double> SamramarlLearner::global_critic_update(const Batch& batch) {
  const Matrix next_in = critic_input(batch.next_states, target_joint_actions(batch.next_states));
  const Matrix y = twin_min_target(batch.global_rewards, config_.discount,
                                   target_global_critics_[0].forward(next_in),
                                   target_global_critics_[1].forward(next_in), batch.not_terminal);
  const Matrix in = critic_input(batch.states, batch.actions);
  double losses[2] = {0.0, 0.0};
  run_all(2, config_.parallel_updates, [&](int j) {
    auto& critic = global_critics_[static_cast<std::size_t>(j)];
    Mlp::Trace trace;
    const Matrix q = critic.forward(in, trace);
    Matrix upstream;
    losses[j] = mse_upstream(q, y, upstream);
    global_opt_[static_cast<std::size_t>(j)].step(critic, critic.backward(trace, upstream));
  });
  return {losses[0], losses[1]};
}

double SamramarlLearner::local_critic_update(const Batch& batch, int agent) {
  const auto n = static_cast<std::size_t>(agent);
  const Matrix next_obs = agent_rows(batch.next_states, agent, dims_.observation);
  const Matrix next_in = critic_input(next_obs, target_actors_[n].forward(next_obs));
  const Matrix y = bootstrap_target(batch.local_rewards.row(agent), config_.discount,
                                    target_local_critics_[n].forward(next_in), batch.not_terminal);
  const Matrix in = critic_input(agent_rows(batch.states, agent, dims_.observation),
                                 agent_rows(batch.actions, agent, dims_.action));
  Mlp::Trace trace;
  const Matrix q = local_critics_[n].forward(in, trace);
  Matrix upstream;
  const double loss = mse_upstream(q, y, upstream);
  local_opt_[n].step(local_critics_[n], local_critics_[n].backward(trace, upstream));
  return loss;
}

double SamramarlLearner::actor_objective(const Batch& batch, int agent) const {
  const auto n = static_cast<std::size_t>(agent);
  const Matrix obs = agent_rows(batch.states, agent, dims_.observation);
  const Matrix a = actors_[n].forward(obs);
  Matrix joint = batch.actions;
  joint.middleRows(static_cast<Eigen::Index>(agent) * dims_.action, dims_.action) = a;
  const double g = global_critics_[0].forward(critic_input(batch.states, joint)).mean();
  const double l = local_critics_[n].forward(critic_input(obs, a)).mean();
  return g + config_.local_critic_weight * l;
}

MlpGradients SamramarlLearner::actor_objective_gradient(const Batch& batch, int agent) const {
  const auto n = static_cast<std::size_t>(agent);
  const double b = static_cast<double>(batch.size());
  const Matrix obs = agent_rows(batch.states, agent, dims_.observation);
  Mlp::Trace actor_trace;
  const Matrix a = actors_[n].forward(obs, actor_trace);

  Matrix joint = batch.actions;
  const Eigen::Index offset = static_cast<Eigen::Index>(agent) * dims_.action;
  joint.middleRows(offset, dims_.action) = a;
  Mlp::Trace g_trace;
  const Matrix qg = global_critics_[0].forward(critic_input(batch.states, joint), g_trace);
  const MlpGradients gg =
      global_critics_[0].backward(g_trace, Matrix::Constant(1, qg.cols(), 1.0 / b));
  Matrix da = gg.input.middleRows(dims_.joint_observation() + offset, dims_.action);

  if (config_.local_critic_weight != 0.0) {
    Mlp::Trace l_trace;
    const Matrix ql = local_critics_[n].forward(critic_input(obs, a), l_trace);
    const MlpGradients gl = local_critics_[n].backward(
        l_trace, Matrix::Constant(1, ql.cols(), config_.local_critic_weight / b));
    da += gl.input.bottomRows(dims_.action);
  }
  return actors_[n].backward(actor_trace, da);
}

double SamramarlLearner::actor_update(const Batch& batch, int agent) {
  const auto n = static_cast<std::size_t>(agent);
  MlpGradients g = actor_objective_gradient(batch, agent);
  const double norm = g.flat().norm();
  actor_opt_[n].step(actors_[n], negated(std::move(g)));
  return norm;
}

void SamramarlLearner::update_agent(const Batch& batch, int agent, bool policy_step,
                                    UpdateStats& stats) {
  const auto n = static_cast<std::size_t>(agent);
  if (policy_step || config_.local_critics_every_step) {
    stats.local_critic_losses[n] = local_critic_update(batch, agent);
  }
  if (policy_step) stats.actor_gradient_norms[n] = actor_update(batch, agent);
}

UpdateStats SamramarlLearner::update(Rng& rng) {
  UpdateStats stats;
  if (!ready()) return stats;
  const Batch batch = buffer_.sample(config_.batch_size, rng);
  stats.updated = true;
  const auto [l1, l2] = global_critic_update(batch);
  stats.critic_loss = 0.5 * (l1 + l2);
  ++update_count_;
  const bool policy_step = update_count_ % config_.policy_delay == 0;
  stats.policy_updated = policy_step;
  stats.local_critic_losses.assign(static_cast<std::size_t>(dims_.agents), 0.0);
  stats.actor_gradient_norms.assign(static_cast<std::size_t>(dims_.agents), 0.0);
  // The actor step reads global critic 1, which is fixed by now, so agents are independent.
  run_all(dims_.agents, config_.parallel_updates,
          [&](int n) { update_agent(batch, n, policy_step, stats); });
  if (policy_step) {
    const double tau = config_.soft_update_rate;
    for (std::size_t n = 0; n < actors_.size(); ++n) {
      soft_update(target_actors_[n], actors_[n], tau);
      soft_update(target_local_critics_[n], local_critics_[n], tau);
    }
    for (std::size_t j = 0; j < 2; ++j) soft_update(target_global_critics_[j], global_critics_[j], tau);
  }
  if (!all_finite()) throw std::runtime_error("learner: a parameter became non-finite");
  return stats;
}

std::vector<std::pair<std::string, Mlp*>> SamramarlLearner::networks() {
  std::vector<std::pair<std::string, Mlp*>> out;
  for (std::size_t n = 0; n < actors_.size(); ++n) {
    const std::string id = std::to_string(n);
    out.emplace_back("actor/" + id, &actors_[n]);
    out.emplace_back("target_actor/" + id, &target_actors_[n]);
    out.emplace_back("local_critic/" + id, &local_critics_[n]);
    out.emplace_back("target_local_critic/" + id, &target_local_critics_[n]);
  }
  for (std::size_t j = 0; j < 2; ++j) {
    const std::string id = std::to_string(j + 1);
    out.emplace_back("global_critic/" + id, &global_critics_[j]);
    out.emplace_back("target_global_critic/" + id, &target_global_critics_[j]);
  }
  return out;
}

// ---- centralised baselines

CentralizedLearner::CentralizedLearner(Algorithm algorithm, LearnerConfig config, Dimensions dims,
                                       Rng& init_rng)
    : Learner(std::move(config), dims), algorithm_(algorithm) {
  if (algorithm != Algorithm::kDdpg && algorithm != Algorithm::kTd3 &&
      algorithm != Algorithm::kDdpgNoSc) {
    throw std::invalid_argument("CentralizedLearner: unsupported algorithm");
  }
  const bool td3 = algorithm == Algorithm::kTd3;
  delay_ = td3 ? config_.policy_delay : 1;
  actor_ = Mlp(with_ends(dims_.joint_observation(), config_.actor_hidden, dims_.joint_action()),
               Activation::kRelu, Activation::kTanh, init_rng);
  for (int j = 0; j < (td3 ? 2 : 1); ++j) {
    critics_.emplace_back(
        with_ends(dims_.joint_observation() + dims_.joint_action(), config_.global_critic_hidden, 1),
        Activation::kRelu, Activation::kIdentity, init_rng);
  }
  target_actor_ = actor_;
  target_critics_ = critics_;
  actor_opt_ = Adam(actor_, config_.actor_learning_rate);
  for (const auto& c : critics_) critic_opt_.emplace_back(c, config_.critic_learning_rate);
}

std::vector<std::vector<double>> CentralizedLearner::act(
    const std::vector<std::vector<double>>& observations, double noise_std, Rng& rng) const {
  if (static_cast<int>(observations.size()) != dims_.agents) {
    throw std::invalid_argument("act: expected one observation per agent");
  }
  Vector joint(dims_.joint_observation());
  for (int n = 0; n < dims_.agents; ++n) {
    const auto& o = observations[static_cast<std::size_t>(n)];
    if (static_cast<int>(o.size()) != dims_.observation) {
      throw std::invalid_argument("act: observation has the wrong size");
    }
    for (int i = 0; i < dims_.observation; ++i) joint(n * dims_.observation + i) = o[static_cast<std::size_t>(i)];
  }
  const Vector a = select_action(actor_, joint, noise_std, rng);
  std::vector<std::vector<double>> out;
  for (int n = 0; n < dims_.agents; ++n) {
    const double* p = a.data() + static_cast<std::ptrdiff_t>(n) * dims_.action;
    out.emplace_back(p, p + dims_.action);
  }
  return out;
}

double CentralizedLearner::critic_update(const Batch& batch, Rng& rng) {
  Matrix next_a = target_actor_.forward(batch.next_states);
  if (twin()) {
    for (Eigen::Index c = 0; c < next_a.cols(); ++c) {
      for (Eigen::Index r = 0; r < next_a.rows(); ++r) {
        const double eps = std::clamp(rng.normal(0.0, config_.smoothing_std), -config_.smoothing_clip,
                                      config_.smoothing_clip);
        next_a(r, c) = std::clamp(next_a(r, c) + eps, -1.0, 1.0);
      }
    }
  }
  Matrix next_in(batch.next_states.rows() + next_a.rows(), batch.size());
  next_in << batch.next_states, next_a;
  Matrix y;
  if (twin()) {
    y = twin_min_target(batch.global_rewards, config_.discount, target_critics_[0].forward(next_in),
                        target_critics_[1].forward(next_in), batch.not_terminal);
  } else {
    y = bootstrap_target(batch.global_rewards, config_.discount, target_critics_[0].forward(next_in),
                         batch.not_terminal);
  }
  Matrix in(batch.states.rows() + batch.actions.rows(), batch.size());
  in << batch.states, batch.actions;
  std::vector<double> losses(critics_.size(), 0.0);
  run_all(static_cast<int>(critics_.size()), config_.parallel_updates, [&](int j) {
    const auto i = static_cast<std::size_t>(j);
    Mlp::Trace trace;
    const Matrix q = critics_[i].forward(in, trace);
    Matrix upstream;
    losses[i] = mse_upstream(q, y, upstream);
    critic_opt_[i].step(critics_[i], critics_[i].backward(trace, upstream));
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(losses.size());
}

double CentralizedLearner::actor_update(const Batch& batch) {
  const double b = static_cast<double>(batch.size());
  Mlp::Trace actor_trace;
  const Matrix a = actor_.forward(batch.states, actor_trace);
  Matrix in(batch.states.rows() + a.rows(), batch.size());
  in << batch.states, a;
  Mlp::Trace q_trace;
  const Matrix q = critics_[0].forward(in, q_trace);
  const MlpGradients gq = critics_[0].backward(q_trace, Matrix::Constant(1, q.cols(), 1.0 / b));
  MlpGradients g = actor_.backward(actor_trace, gq.input.bottomRows(a.rows()));
  const double norm = g.flat().norm();
  actor_opt_.step(actor_, negated(std::move(g)));
  return norm;
}

UpdateStats CentralizedLearner::update(Rng& rng) {
  UpdateStats stats;
  if (!ready()) return stats;
  const Batch batch = buffer_.sample(config_.batch_size, rng);
  stats.updated = true;
  stats.critic_loss = critic_update(batch, rng);
  ++update_count_;
  if (update_count_ % delay_ == 0) {
    stats.policy_updated = true;
    stats.actor_gradient_norms.push_back(actor_update(batch));
    const double tau = config_.soft_update_rate;
    soft_update(target_actor_, actor_, tau);
    for (std::size_t j = 0; j < critics_.size(); ++j) soft_update(target_critics_[j], critics_[j], tau);
  }
  if (!all_finite()) throw std::runtime_error("learner: a parameter became non-finite");
  return stats;
}

std::vector<std::pair<std::string, Mlp*>> CentralizedLearner::networks() {
  std::vector<std::pair<std::string, Mlp*>> out;
  out.emplace_back("actor", &actor_);
  out.emplace_back("target_actor", &target_actor_);
  for (std::size_t j = 0; j < critics_.size(); ++j) {
    const std::string id = std::to_string(j + 1);
    out.emplace_back("critic/" + id, &critics_[j]);
    out.emplace_back("target_critic/" + id, &target_critics_[j]);
  }
  return out;
}

// ---- random

RandomPolicy::RandomPolicy(LearnerConfig config, Dimensions dims)
    : Learner(std::move(config), dims) {}

std::vector<std::vector<double>> RandomPolicy::act(const std::vector<std::vector<double>>& observations,
                                                   double, Rng& rng) const {
  if (static_cast<int>(observations.size()) != dims_.agents) {
    throw std::invalid_argument("act: expected one observation per agent");
  }
  std::vector<std::vector<double>> out(static_cast<std::size_t>(dims_.agents));
  for (auto& a : out) {
    a.resize(static_cast<std::size_t>(dims_.action));
    for (double& x : a) x = rng.uniform(-1.0, 1.0);
  }
  return out;
}

std::unique_ptr<Learner> make_learner(Algorithm algorithm, const LearnerConfig& config,
                                      Dimensions dims, Rng& init_rng) {
  switch (algorithm) {
    case Algorithm::kSamramarl:
      return std::make_unique<SamramarlLearner>(config, dims, init_rng);
    case Algorithm::kDdpg:
    case Algorithm::kTd3:
    case Algorithm::kDdpgNoSc:
      return std::make_unique<CentralizedLearner>(algorithm, config, dims, init_rng);
    case Algorithm::kRandom:
      return std::make_unique<RandomPolicy>(config, dims);
  }
  throw std::invalid_argument("make_learner: unknown algorithm");
}

}  // namespace samra::marl
