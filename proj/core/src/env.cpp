#include "samra/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace samra::env {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::invalid_argument(field + ": " + what);
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

double to_unit_interval(double x) { return (std::clamp(x, -1.0, 1.0) + 1.0) / 2.0; }

}  // namespace

int EnvConfig::slots_per_episode() const {
  return std::max(1, static_cast<int>(
                         std::lround(semantic.delivery_window_s / scenario.slot_duration_s)));
}

void EnvConfig::validate() const {
  const auto& s = scenario;
  require(s.num_platoons >= 1, "scenario.num_platoons", "must be >= 1");
  require(s.platoon_size >= 1, "scenario.platoon_size", "must be >= 1");
  require(s.platoon_gap_m >= 5.0 && s.platoon_gap_m <= 35.0, "scenario.platoon_gap",
          "must lie in [5, 35] m");
  require(s.num_subchannels >= 1, "scenario.num_subchannels", "must be >= 1");
  require(s.subchannel_bandwidth_hz > 0.0, "scenario.subchannel_bandwidth_hz", "must be > 0");
  require(s.speed_mps >= 0.0, "scenario.speed_mps", "must be >= 0");
  require(s.slot_duration_s > 0.0, "scenario.slot_duration_s", "must be > 0");
  require(s.map_width_m >= 1299.0 && s.map_height_m >= 750.0, "scenario.map",
          "must be at least 1299 m x 750 m");
  const auto& m = semantic;
  require(m.entropy_sm > 0.0 && m.entropy_mm_text > 0.0 && m.entropy_mm_image > 0.0,
          "semantic.entropy", "must be > 0");
  require(m.u_max_text >= 1 && m.u_max_image >= 1, "semantic.u_max", "must be >= 1");
  require(m.payload_min_suts >= 0.0 && m.payload_max_suts >= m.payload_min_suts,
          "semantic.payload", "need 0 <= min <= max");
  require(m.delivery_window_s > 0.0, "semantic.delivery_window_s", "must be > 0");
  require(m.logistic_scale > 0.0, "semantic.logistic_scale", "must be > 0");
  require(m.objective_weight >= 0.0, "semantic.objective_weight", "must be >= 0");
  require(transform_factor_bits >= 1.0, "env.transform_factor_bits", "must be >= 1");
  require(scaling.gain_scale_db > 0.0 && scaling.interference_scale_db > 0.0 &&
              scaling.payload_scale_suts > 0.0,
          "env.scaling", "scales must be > 0");
}

std::vector<StreamRole> PairingPlan::roles(int member_count) const {
  std::vector<StreamRole> out(static_cast<std::size_t>(member_count), StreamRole::kSingleText);
  for (const auto& [a, b] : pairs) {
    out[a] = StreamRole::kPairText;
    out[b] = StreamRole::kPairImage;
  }
  return out;
}

PairingPlan pair_members(int member_count) {
  if (member_count < 0) throw std::invalid_argument("pair_members: negative member count");
  PairingPlan plan;
  for (int i = 0; i + 1 < member_count; i += 2) plan.pairs.emplace_back(i, i + 1);
  if (member_count % 2 == 1) plan.single = member_count - 1;
  return plan;
}

DecodedAction decode_action(std::span<const double> raw, const ActionLayout& layout) {
  if (static_cast<int>(raw.size()) != layout.dimension()) {
    throw std::invalid_argument("decode_action: expected " + std::to_string(layout.dimension()) +
                                " entries, got " + std::to_string(raw.size()));
  }
  DecodedAction out;
  for (double x : raw) {
    if (!(x >= -1.0 && x <= 1.0)) ++out.clipped_entries;
  }
  auto at = [&](std::size_t i) {
    const double x = raw[i];
    return std::isnan(x) ? 0.0 : std::clamp(x, -1.0, 1.0);
  };

  AgentAction& a = out.action;
  const int k_count = layout.num_subchannels;
  int best = 0;
  for (int k = 1; k < k_count; ++k) {
    if (at(k) > at(best)) best = k;  // ties keep the lowest index
  }
  a.subchannel = best;
  std::size_t pos = static_cast<std::size_t>(k_count);
  a.v2v = at(pos++) >= 0.0;
  a.text_power_w = to_unit_interval(at(pos++)) * layout.max_power_w;
  a.image_power_w = to_unit_interval(at(pos++)) * layout.max_power_w;
  if (!a.v2v || !layout.has_image_stream) a.image_power_w = 0.0;
  const double total = a.text_power_w + a.image_power_w;
  if (total > layout.max_power_w) {
    const double scale = layout.max_power_w / total;
    a.text_power_w *= scale;
    a.image_power_w *= scale;
  }
  auto decode_u = [](double x, int u_max) {
    return std::clamp(round_half_up(1.0 + to_unit_interval(x) * (u_max - 1)), 1, u_max);
  };
  for (int j = 0; j < layout.members; ++j) a.u_text.push_back(decode_u(at(pos++), layout.u_max_text));
  for (int j = 0; j < layout.members; ++j) {
    a.u_image.push_back(decode_u(at(pos++), layout.u_max_image));
  }
  return out;
}

int sanitize_action(AgentAction& a, const ActionLayout& layout) {
  int repairs = 0;
  if (a.subchannel < 0 || a.subchannel >= layout.num_subchannels) {
    a.subchannel = std::clamp(a.subchannel, 0, layout.num_subchannels - 1);
    ++repairs;
  }
  auto fix_power = [&](double& p) {
    if (!(p >= 0.0)) {
      p = 0.0;
      ++repairs;
    } else if (p > layout.max_power_w) {
      p = layout.max_power_w;
      ++repairs;
    }
  };
  fix_power(a.text_power_w);
  fix_power(a.image_power_w);
  if ((!a.v2v || !layout.has_image_stream) && a.image_power_w != 0.0) {
    a.image_power_w = 0.0;
    ++repairs;
  }
  const double total = a.text_power_w + a.image_power_w;
  if (total > layout.max_power_w * (1.0 + 1e-12)) {
    const double scale = layout.max_power_w / total;
    a.text_power_w *= scale;
    a.image_power_w *= scale;
    ++repairs;
  }
  auto fix_u = [&](std::vector<int>& u, int u_max) {
    if (static_cast<int>(u.size()) != layout.members) {
      u.resize(static_cast<std::size_t>(layout.members), (1 + u_max + 1) / 2);
      ++repairs;
    }
    for (int& v : u) {
      if (v < 1 || v > u_max) {
        v = std::clamp(v, 1, u_max);
        ++repairs;
      }
    }
  };
  fix_u(a.u_text, layout.u_max_text);
  fix_u(a.u_image, layout.u_max_image);
  return repairs;
}

int v2i_symbol_length(const AgentAction& action, const ActionLayout& layout) {
  if (!action.u_text.empty()) return action.u_text.front();
  return (1 + layout.u_max_text + 1) / 2;
}

double SlotOutcome::objective(double lambda) const {
  double qoe = 0.0;
  double srs = 0.0;
  for (const auto& p : platoons) {
    qoe += p.qoe;
    srs += p.srs_logistic;
  }
  return qoe + lambda * srs;
}

double measure_delay(std::span<const double> delivered_per_slot, double payload,
                     double slot_ms, double window_ms) {
  double cumulative = 0.0;
  for (std::size_t t = 0; t < delivered_per_slot.size(); ++t) {
    cumulative += delivered_per_slot[t];
    if (semantics::srs_hard(cumulative, payload) == 1) {
      return std::min(static_cast<double>(t + 1) * slot_ms, window_ms);
    }
  }
  return window_ms;
}

Environment::Environment(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& s = config_.scenario;
  const int members = s.platoon_size - 1;
  pairing_ = pair_members(members);
  roles_ = pairing_.roles(members);
  layout_ = ActionLayout{s.num_subchannels,        members,
                         s.max_power_w(),          config_.semantic.u_max_text,
                         config_.semantic.u_max_image, pairing_.has_image_stream()};
  surrogate_ = config_.similarity_table_path.empty()
                   ? semantics::SimilaritySurrogate(config_.similarity)
                   : semantics::load_similarity_table(config_.similarity_table_path);
}

const channel::ChannelRealization& Environment::channel() const {
  if (!channel_model_) throw std::logic_error("Environment: reset() has not been called");
  return channel_model_->realization();
}

int Environment::observation_dim() const {
  const int k = config_.scenario.num_subchannels;
  const int members = config_.scenario.platoon_size - 1;
  return k + k * members + members * k + k + 1;
}

std::vector<std::vector<double>> Environment::reset(std::uint64_t seed) {
  const auto& s = config_.scenario;
  topology_ = channel::build_topology(s, Rng::mix(seed, 1));
  channel_model_ = std::make_unique<channel::ChannelModel>(s, Rng::mix(seed, 2));
  channel_model_->reset(topology_);

  Rng profile_rng = Rng::derive(seed, "profiles");
  const auto& d = config_.profiles;
  auto draw_profile = [&](bool image) {
    semantics::QoEProfile p;
    p.rate_weight = profile_rng.uniform(d.rate_weight_min, d.rate_weight_max);
    p.similarity_target = profile_rng.uniform(d.similarity_target_min, d.similarity_target_max);
    p.rate_target_ksuts = image ? profile_rng.uniform(d.image_rate_target_min_ksuts,
                                                      d.image_rate_target_max_ksuts)
                                : profile_rng.uniform(d.text_rate_target_min_ksuts,
                                                      d.text_rate_target_max_ksuts);
    p.rate_slope = std::max(1e-3, profile_rng.normal(d.rate_slope_mean, d.rate_slope_std));
    p.similarity_slope =
        std::max(1e-3, profile_rng.normal(d.similarity_slope_mean, d.similarity_slope_std));
    return p;
  };
  profiles_.assign(s.num_platoons, {});
  for (int n = 0; n < s.num_platoons; ++n) {
    profiles_[n].push_back(draw_profile(false));  // leader: V2I text
    for (StreamRole role : roles_) profiles_[n].push_back(draw_profile(role == StreamRole::kPairImage));
  }

  Rng demand_rng = Rng::derive(seed, "demand");
  const auto& sem = config_.semantic;
  payload_ = sem.payload_min_suts == sem.payload_max_suts
                 ? sem.payload_min_suts
                 : std::round(demand_rng.uniform(sem.payload_min_suts, sem.payload_max_suts));

  slot_ = 0;
  residual_.assign(s.num_platoons, payload_);
  cumulative_.assign(s.num_platoons, 0.0);
  delivered_history_.assign(s.num_platoons, {});
  prev_member_interference_.assign(
      s.num_platoons, std::vector<std::vector<double>>(
                          layout_.members, std::vector<double>(s.num_subchannels, 0.0)));
  prev_bs_interference_.assign(s.num_platoons, std::vector<double>(s.num_subchannels, 0.0));
  reward_sum_ = qoe_sum_ = 0.0;
  collisions_ = threshold_violations_ = clipped_ = repaired_ = 0;
  return observations();
}

std::vector<std::vector<double>> Environment::observations() const {
  const auto& ch = channel();
  const auto& sc = config_.scaling;
  const double sigma2 = ch.noise_w();
  const int k_count = config_.scenario.num_subchannels;
  auto gain_feature = [&](double h) {
    const double db = 10.0 * std::log10(std::max(h, 1e-300) / sigma2);
    return (db - sc.gain_offset_db) / sc.gain_scale_db;
  };
  auto interference_feature = [&](double i) {
    return 10.0 * std::log10((i + sigma2) / sigma2) / sc.interference_scale_db;
  };

  std::vector<std::vector<double>> obs(static_cast<std::size_t>(num_agents()));
  for (int n = 0; n < num_agents(); ++n) {
    auto& o = obs[n];
    o.reserve(static_cast<std::size_t>(observation_dim()));
    for (int k = 0; k < k_count; ++k) o.push_back(gain_feature(ch.gain(n, ch.bs_receiver(), k)));
    const auto& members = topology_.platoons[n];
    for (int j = 0; j < layout_.members; ++j) {
      for (int k = 0; k < k_count; ++k) o.push_back(gain_feature(ch.gain(n, members[j + 1], k)));
    }
    for (int j = 0; j < layout_.members; ++j) {
      for (int k = 0; k < k_count; ++k) {
        o.push_back(interference_feature(prev_member_interference_[n][j][k]));
      }
    }
    for (int k = 0; k < k_count; ++k) o.push_back(interference_feature(prev_bs_interference_[n][k]));
    o.push_back(residual_[n] / sc.payload_scale_suts);
  }
  return obs;
}

SlotOutcome Environment::compute_slot(std::vector<AgentAction>& actions, int* repaired) const {
  const int n_agents = num_agents();
  if (static_cast<int>(actions.size()) != n_agents) {
    throw std::invalid_argument("Environment: expected " + std::to_string(n_agents) +
                                " actions, got " + std::to_string(actions.size()));
  }
  int repairs = 0;
  for (auto& a : actions) repairs += sanitize_action(a, layout_);
  if (repaired) *repaired = repairs;

  const auto& ch = channel();
  const auto& sem = config_.semantic;
  const double sigma2 = ch.noise_w();
  const double bandwidth = sem.bandwidth_hz;

  std::vector<channel::Transmission> tx(static_cast<std::size_t>(n_agents));
  std::vector<int> per_channel(static_cast<std::size_t>(config_.scenario.num_subchannels), 0);
  for (int n = 0; n < n_agents; ++n) {
    const auto& a = actions[n];
    tx[n] = channel::Transmission{a.subchannel, a.v2v, true, a.text_power_w, a.image_power_w};
    ++per_channel[a.subchannel];
  }

  SlotOutcome out;
  for (int c : per_channel) out.collisions += std::max(0, c - 1);

  auto rate_for = [&](double entropy, int u) {
    return config_.semantic_aware
               ? semantics::semantic_rate(bandwidth, entropy, u)
               : semantics::qoe_traditional(bandwidth, entropy, config_.transform_factor_bits);
  };

  for (int n = 0; n < n_agents; ++n) {
    const AgentAction& a = actions[n];
    const auto& vehicles = topology_.platoons[n];
    const auto& prof = profiles_[n];
    PlatoonOutcome po;
    po.subchannel = a.subchannel;
    po.v2v = a.v2v;
    po.service.assign(vehicles.size(), semantics::ServiceLevel{});
    po.sinr_text.assign(layout_.members, 0.0);
    po.sinr_image.assign(layout_.members, 0.0);
    const int k = a.subchannel;

    if (a.v2v) {
      double rate_sum = 0.0;
      for (int j = 0; j < layout_.members; ++j) {
        const int rx = vehicles[j + 1];
        const double interference =
            channel::compute_interference(tx, ch, n, channel::Receiver{rx, false}, k);
        const double h = ch.gain(n, rx, k);
        const double sinr_t = channel::compute_sinr(a.text_power_w, h, interference, sigma2);
        const double sinr_i = channel::compute_sinr(a.image_power_w, h, interference, sigma2);
        po.sinr_text[j] = sinr_t;
        po.sinr_image[j] = sinr_i;
        semantics::ServiceLevel& sl = po.service[j + 1];
        switch (roles_[j]) {
          case StreamRole::kSingleText:
            sl.similarity = semantics::similarity_sm(surrogate_, a.u_text[j], sinr_t);
            sl.rate_suts_per_s = rate_for(sem.entropy_sm, a.u_text[j]);
            break;
          case StreamRole::kPairText:
            sl.similarity = semantics::similarity_mm(surrogate_, a.u_text[j], a.u_image[j],
                                                     sinr_t, sinr_i);
            sl.rate_suts_per_s = rate_for(sem.entropy_mm_text, a.u_text[j]);
            break;
          case StreamRole::kPairImage:
            sl.similarity = semantics::similarity_mm(surrogate_, a.u_text[j], a.u_image[j],
                                                     sinr_t, sinr_i);
            sl.rate_suts_per_s = rate_for(sem.entropy_mm_image, a.u_image[j]);
            break;
        }
        const bool delivers = !config_.gate_delivery_on_similarity ||
                              sl.similarity >= prof[j + 1].similarity_target;
        if (delivers) rate_sum += sl.rate_suts_per_s;
      }
      // Members time-share the platoon's subchannel equally.
      po.delivered_rate = layout_.members > 0 ? rate_sum / layout_.members : 0.0;
    } else {
      const int bs = ch.bs_receiver();
      const double interference =
          channel::compute_interference(tx, ch, n, channel::Receiver{bs, true}, k);
      po.sinr_bs = channel::compute_sinr(a.text_power_w, ch.gain(n, bs, k), interference, sigma2);
      const int u = v2i_symbol_length(a, layout_);
      po.service[0].similarity = semantics::similarity_sm(surrogate_, u, po.sinr_bs);
      po.service[0].rate_suts_per_s = rate_for(sem.entropy_sm, u);
    }

    if (config_.semantic_aware) {
      po.qoe = semantics::qoe_platoon(prof, po.service);
    } else {
      // QoE': rate-only score, bits carry no semantic accuracy term.
      for (std::size_t v = 0; v < prof.size(); ++v) {
        po.qoe += semantics::score_sigmoid(po.service[v].rate_suts_per_s / 1000.0,
                                           prof[v].rate_target_ksuts, prof[v].rate_slope);
      }
    }
    for (std::size_t v = 0; v < prof.size(); ++v) {
      const bool served = v == 0 ? !a.v2v : a.v2v;
      if (!served) continue;
      const double r = semantics::score_sigmoid(po.service[v].rate_suts_per_s / 1000.0,
                                                prof[v].rate_target_ksuts, prof[v].rate_slope);
      const double acc = semantics::score_sigmoid(po.service[v].similarity,
                                                  prof[v].similarity_target,
                                                  prof[v].similarity_slope);
      if (r < config_.qoe_threshold || (config_.semantic_aware && acc < config_.qoe_threshold)) {
        ++po.threshold_violations;
      }
    }
    po.srs_logistic = semantics::srs_logistic(po.delivered_rate / 1000.0,
                                              payload_ / 1000.0, sem.delivery_window_s,
                                              sem.logistic_scale);
    const double srs_term = config_.negative_srs_reward ? -sem.reward_weight_srs
                                                       : sem.reward_weight_srs;
    po.local_reward = srs_term * po.srs_logistic + sem.reward_weight_qoe * po.qoe;
    out.global_reward += po.local_reward;
    out.platoons.push_back(std::move(po));
  }
  out.global_reward /= n_agents;
  return out;
}

SlotOutcome Environment::evaluate_slot(std::vector<AgentAction> actions) const {
  return compute_slot(actions, nullptr);
}

void Environment::record_interference(const std::vector<AgentAction>& actions) {
  const auto& ch = channel();
  std::vector<channel::Transmission> tx;
  for (const auto& a : actions) {
    tx.push_back(channel::Transmission{a.subchannel, a.v2v, true, a.text_power_w,
                                       a.image_power_w});
  }
  for (int n = 0; n < num_agents(); ++n) {
    const auto& vehicles = topology_.platoons[n];
    for (int k = 0; k < config_.scenario.num_subchannels; ++k) {
      for (int j = 0; j < layout_.members; ++j) {
        prev_member_interference_[n][j][k] = channel::compute_interference(
            tx, ch, n, channel::Receiver{vehicles[j + 1], false}, k);
      }
      prev_bs_interference_[n][k] = channel::compute_interference(
          tx, ch, n, channel::Receiver{ch.bs_receiver(), true}, k);
    }
  }
}

StepResult Environment::step(std::vector<AgentAction> actions) {
  if (!channel_model_) throw std::logic_error("Environment: reset() has not been called");
  if (slot_ >= config_.slots_per_episode()) {
    throw std::logic_error("Environment: episode finished, call reset()");
  }
  StepResult result;
  result.outcome = compute_slot(actions, &result.repaired);
  emit_trace(actions, result.outcome);
  record_interference(actions);

  const double slot_s = config_.scenario.slot_duration_s;
  double qoe_mean = 0.0;
  for (int n = 0; n < num_agents(); ++n) {
    const auto& po = result.outcome.platoons[n];
    const double delivered = po.delivered_rate * slot_s;
    cumulative_[n] += delivered;
    residual_[n] = std::max(0.0, residual_[n] - delivered);
    delivered_history_[n].push_back(delivered);
    result.local_rewards.push_back(po.local_reward);
    qoe_mean += po.qoe;
    threshold_violations_ += po.threshold_violations;
  }
  result.global_reward = result.outcome.global_reward;
  reward_sum_ += result.global_reward;
  qoe_sum_ += qoe_mean / num_agents();
  collisions_ += result.outcome.collisions;
  repaired_ += result.repaired;

  ++slot_;
  topology_ = channel::advance_mobility(topology_, slot_s);
  channel_model_->advance(topology_);
  result.done = slot_ >= config_.slots_per_episode();
  result.observations = observations();
  return result;
}

StepResult Environment::step_raw(const std::vector<std::vector<double>>& raw_actions) {
  std::vector<AgentAction> actions;
  std::int64_t clipped = 0;
  for (const auto& raw : raw_actions) {
    auto decoded = decode_action(raw, layout_);
    clipped += decoded.clipped_entries;
    actions.push_back(std::move(decoded.action));
  }
  clipped_ += clipped;
  return step(std::move(actions));
}

EpisodeMetrics Environment::episode_metrics() const {
  EpisodeMetrics m;
  const double slots = std::max(1, slot_);
  m.global_reward = reward_sum_ / slots;
  m.mean_qoe = qoe_sum_ / slots;
  const double slot_ms = config_.scenario.slot_duration_s * 1000.0;
  const double window_ms = config_.semantic.delivery_window_s * 1000.0;
  double srs = 0.0;
  double delay = 0.0;
  for (int n = 0; n < num_agents(); ++n) {
    srs += semantics::srs_hard(cumulative_[n], payload_);
    delay += measure_delay(delivered_history_[n], payload_, slot_ms, window_ms);
  }
  m.srs_hard = srs / num_agents();
  m.mean_delay_ms = delay / num_agents();
  m.collisions = collisions_;
  m.threshold_violations = threshold_violations_;
  m.clipped_actions = clipped_;
  m.box_violations = repaired_;
  return m;
}

void Environment::emit_trace(const std::vector<AgentAction>& actions,
                             const SlotOutcome& outcome) const {
  if (!trace_) return;
  for (int n = 0; n < num_agents(); ++n) {
    const auto& a = actions[n];
    const auto& po = outcome.platoons[n];
    nlohmann::json rec;
    rec["slot"] = slot_;
    rec["agent"] = n;
    rec["subchannel"] = a.subchannel;
    rec["v2v"] = a.v2v;
    rec["text_power_w"] = a.text_power_w;
    rec["image_power_w"] = a.image_power_w;
    rec["u_text"] = a.u_text;
    rec["u_image"] = a.u_image;
    rec["sinr_text"] = po.sinr_text;
    rec["sinr_image"] = po.sinr_image;
    rec["sinr_bs"] = po.sinr_bs;
    std::vector<double> xi;
    std::vector<double> phi;
    for (const auto& s : po.service) {
      xi.push_back(s.similarity);
      phi.push_back(s.rate_suts_per_s);
    }
    rec["similarity"] = xi;
    rec["rate_suts_per_s"] = phi;
    rec["local_reward"] = po.local_reward;
    rec["global_reward"] = outcome.global_reward;
    *trace_ << rec.dump() << '\n';
  }
}

}  // namespace samra::env
