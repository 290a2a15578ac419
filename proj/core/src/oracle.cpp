#include "samra/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <string>

namespace samra::oracle {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("oracle: " + what);
}

bool on_grid(double v, const std::vector<double>& grid) {
  return std::find(grid.begin(), grid.end(), v) != grid.end();
}

bool on_grid(int v, const std::vector<int>& grid) {
  return std::find(grid.begin(), grid.end(), v) != grid.end();
}

semantics::SimilaritySurrogate make_surrogate(const StaticInstance& inst) {
  return inst.similarity_grid ? semantics::SimilaritySurrogate(*inst.similarity_grid)
                              : semantics::SimilaritySurrogate(inst.similarity);
}

struct PlatoonValue {
  double qoe = 0.0;
  double logistic = 0.0;
  bool below_threshold = false;
};

// Interference at `rx` on subchannel k weighted by each other platoon's beta.
double weighted_interference(const StaticInstance& inst, const Assignment& a,
                             const std::vector<std::vector<double>>& beta, int own, int rx,
                             bool base_station, int k) {
  double total = 0.0;
  for (int m = 0; m < inst.num_agents; ++m) {
    if (m == own) continue;
    const double b = beta[m][k];
    if (b == 0.0) continue;
    const auto& am = a[m];
    const double h = inst.channel.gain(m, rx, k);
    if (base_station) {
      if (!am.v2v) total += b * (am.text_power_w * h);
    } else if (am.v2v) {
      total += b * ((am.text_power_w + am.image_power_w) * h);
    }
  }
  return total;
}

PlatoonValue platoon_value(const StaticInstance& inst, const semantics::SimilaritySurrogate& sur,
                           const Assignment& a, const std::vector<std::vector<double>>& beta, int n,
                           int k) {
  const auto& act = a[n];
  const auto& sem = inst.semantic;
  const auto& prof = inst.profiles[n];
  const auto& vehicles = inst.platoons[n];
  const int members = inst.members();
  const double sigma2 = inst.channel.noise_w();
  const auto plan = env::pair_members(members);
  const auto roles = plan.roles(members);
  auto rate = [&](double entropy, int u) {
    if (!inst.semantic_aware) return sem.bandwidth_hz * entropy / inst.transform_factor_bits;
    return sem.bandwidth_hz * entropy / static_cast<double>(u);
  };

  std::vector<semantics::ServiceLevel> service(vehicles.size());
  double delivered = 0.0;
  if (act.v2v) {
    double sum = 0.0;
    for (int j = 0; j < members; ++j) {
      const int rx = vehicles[j + 1];
      const double interference = weighted_interference(inst, a, beta, n, rx, false, k);
      const double h = inst.channel.gain(n, rx, k);
      const double denom = interference + sigma2;
      const double sinr_t = act.text_power_w * h / denom;
      const double sinr_i = act.image_power_w * h / denom;
      auto& sl = service[j + 1];
      if (roles[j] == env::StreamRole::kSingleText) {
        sl.similarity = semantics::similarity_sm(sur, act.u_text[j], sinr_t);
        sl.rate_suts_per_s = rate(sem.entropy_sm, act.u_text[j]);
      } else {
        sl.similarity = semantics::similarity_mm(sur, act.u_text[j], act.u_image[j], sinr_t, sinr_i);
        sl.rate_suts_per_s = roles[j] == env::StreamRole::kPairText
                                 ? rate(sem.entropy_mm_text, act.u_text[j])
                                 : rate(sem.entropy_mm_image, act.u_image[j]);
      }
      if (!inst.gate_delivery_on_similarity || sl.similarity >= prof[j + 1].similarity_target) {
        sum += sl.rate_suts_per_s;
      }
    }
    delivered = members > 0 ? sum / members : 0.0;
  } else {
    const int bs = inst.channel.bs_receiver();
    const double interference = weighted_interference(inst, a, beta, n, bs, true, k);
    const double sinr = act.text_power_w * inst.channel.gain(n, bs, k) / (interference + sigma2);
    const int u = env::v2i_symbol_length(act, inst.layout());
    service[0].similarity = semantics::similarity_sm(sur, u, sinr);
    service[0].rate_suts_per_s = rate(sem.entropy_sm, u);
  }

  PlatoonValue out;
  for (std::size_t v = 0; v < prof.size(); ++v) {
    const double score_r = semantics::score_sigmoid(service[v].rate_suts_per_s / 1000.0,
                                                    prof[v].rate_target_ksuts, prof[v].rate_slope);
    const double score_a = semantics::score_sigmoid(service[v].similarity,
                                                    prof[v].similarity_target, prof[v].similarity_slope);
    if (inst.semantic_aware) {
      out.qoe += prof[v].rate_weight * score_r + (1.0 - prof[v].rate_weight) * score_a;
    } else {
      out.qoe += score_r;
    }
    const bool served = v == 0 ? !act.v2v : act.v2v;
    if (served && (score_r < inst.qoe_threshold ||
                   (inst.semantic_aware && score_a < inst.qoe_threshold))) {
      out.below_threshold = true;
    }
  }
  out.logistic = semantics::srs_logistic(delivered / 1000.0, inst.payload_suts / 1000.0,
                                         sem.delivery_window_s, sem.logistic_scale);
  return out;
}

void check_assignment(const StaticInstance& inst, const Assignment& a) {
  require(static_cast<int>(a.size()) == inst.num_agents,
          "assignment has " + std::to_string(a.size()) + " agents, instance has " +
              std::to_string(inst.num_agents));
  const int members = inst.members();
  const bool image = env::pair_members(members).has_image_stream();
  for (std::size_t n = 0; n < a.size(); ++n) {
    const auto& act = a[n];
    const std::string who = "agent " + std::to_string(n) + ": ";
    require(act.subchannel >= 0 && act.subchannel < inst.num_subchannels, who + "subchannel off-grid");
    require(on_grid(act.text_power_w, inst.power_levels), who + "text power off-grid");
    const bool image_used = act.v2v && image;
    require(image_used ? on_grid(act.image_power_w, inst.power_levels) : act.image_power_w == 0.0,
            who + "image power off-grid");
    require(static_cast<int>(act.u_text.size()) == members &&
                static_cast<int>(act.u_image.size()) == members,
            who + "u vectors must have one entry per member");
    for (int u : act.u_text) require(on_grid(u, inst.u_text_levels), who + "u_text off-grid");
    for (int u : act.u_image) require(on_grid(u, inst.u_image_levels), who + "u_image off-grid");
  }
}

std::vector<std::vector<double>> one_hot(const StaticInstance& inst, const Assignment& a) {
  std::vector<std::vector<double>> beta(inst.num_agents, std::vector<double>(inst.num_subchannels, 0.0));
  for (int n = 0; n < inst.num_agents; ++n) beta[n][a[n].subchannel] = 1.0;
  return beta;
}

ObjectiveBreakdown evaluate_beta(const StaticInstance& inst, const Assignment& a,
                                 const std::vector<std::vector<double>>& beta) {
  const auto sur = make_surrogate(inst);
  ObjectiveBreakdown out;
  out.lambda = inst.semantic.objective_weight;
  const double p_max = inst.max_power_w;
  const double tol = p_max * 1e-12;
  std::vector<double> load(inst.num_subchannels, 0.0);
  for (int n = 0; n < inst.num_agents; ++n) {
    double q = 0.0;
    double l = 0.0;
    double row = 0.0;
    for (int k = 0; k < inst.num_subchannels; ++k) {
      const double b = beta[n][k];
      row += b;
      load[k] += b;
      if (b != 0.0 && b != 1.0) out.violations.binary_assignment = true;
      if (b == 0.0) continue;
      const PlatoonValue v = platoon_value(inst, sur, a, beta, n, k);
      q += b * v.qoe;
      l += b * v.logistic;
      if (v.below_threshold) out.violations.score_threshold = true;
    }
    if (row > 1.0 + 1e-12) out.violations.multiple_subchannels = true;
    out.platoon_qoe.push_back(q);
    out.platoon_logistic.push_back(l);

    const auto& act = a[n];
    for (int u : act.u_text) {
      if (u < 1 || u > inst.semantic.u_max_text) out.violations.text_symbol_bounds = true;
    }
    for (int u : act.u_image) {
      if (u < 1 || u > inst.semantic.u_max_image) out.violations.image_symbol_bounds = true;
    }
    if (act.text_power_w < 0.0 || act.image_power_w < 0.0 ||
        act.text_power_w + act.image_power_w > p_max + tol) {
      out.violations.power_box = true;
    }
  }
  for (double x : load) {
    if (x > 1.0 + 1e-12) out.violations.shared_subchannel = true;
  }
  if (inst.payload_suts > inst.semantic.payload_max_suts) out.violations.payload_bound = true;
  out.total = out.recompute();
  return out;
}

}  // namespace

bool ConstraintFlags::any() const {
  return binary_assignment || shared_subchannel || multiple_subchannels || text_symbol_bounds ||
         image_symbol_bounds || power_box || score_threshold || payload_bound;
}

double ObjectiveBreakdown::qoe_sum() const {
  double s = 0.0;
  for (double q : platoon_qoe) s += q;
  return s;
}

double ObjectiveBreakdown::logistic_sum() const {
  double s = 0.0;
  for (double l : platoon_logistic) s += l;
  return s;
}

env::ActionLayout StaticInstance::layout() const {
  const int m = platoons.empty() ? 0 : members();
  return env::ActionLayout{num_subchannels,       m,
                           max_power_w,           semantic.u_max_text,
                           semantic.u_max_image, env::pair_members(m).has_image_stream()};
}

void StaticInstance::validate() const {
  require(num_agents >= 1 && num_subchannels >= 1, "need at least one agent and subchannel");
  require(static_cast<int>(platoons.size()) == num_agents, "one vehicle list per agent");
  require(static_cast<int>(profiles.size()) == num_agents, "one profile list per agent");
  const std::size_t size = platoons.front().size();
  require(size >= 1, "platoons need a leader");
  for (std::size_t n = 0; n < platoons.size(); ++n) {
    require(platoons[n].size() == size, "platoons must share one size");
    require(profiles[n].size() == size, "one profile per vehicle");
    for (int v : platoons[n]) require(v >= 0 && v < channel.bs_receiver(), "vehicle index out of range");
  }
  require(channel.num_transmitters() == num_agents, "channel transmitters must equal agents");
  require(channel.num_subchannels() == num_subchannels, "channel subchannels mismatch");
  require(!power_levels.empty() && !u_text_levels.empty() && !u_image_levels.empty(),
          "grids must be non-empty");
  for (double p : power_levels) require(std::isfinite(p) && p >= 0.0, "power levels must be finite and >= 0");
  for (int u : u_text_levels) require(u >= 1, "u levels must be >= 1");
  for (int u : u_image_levels) require(u >= 1, "u levels must be >= 1");
  for (double g : channel.raw()) require(std::isfinite(g) && g >= 0.0, "gains must be finite");
  require(std::isfinite(payload_suts) && payload_suts >= 0.0, "payload must be finite");
}

void apply_default_grids(StaticInstance& inst) {
  const double p = inst.max_power_w;
  inst.power_levels = {0.0, p / 3.0, 2.0 * p / 3.0, p};
  auto grid = [](int u_max) {
    std::vector<int> out;
    for (int u : {5, 10, 20, 30}) {
      if (u <= u_max) out.push_back(u);
    }
    if (out.empty()) out.push_back(u_max);
    return out;
  };
  inst.u_text_levels = grid(inst.semantic.u_max_text);
  inst.u_image_levels = grid(inst.semantic.u_max_image);
}

StaticInstance freeze_instance(const env::Environment& environment) {
  const auto& cfg = environment.config();
  StaticInstance inst;
  inst.channel = environment.channel();
  inst.num_agents = environment.num_agents();
  inst.num_subchannels = cfg.scenario.num_subchannels;
  inst.platoons = environment.topology().platoons;
  inst.profiles = environment.profiles();
  inst.payload_suts = environment.payload_suts();
  inst.semantic = cfg.semantic;
  inst.similarity = cfg.similarity;
  if (const auto* grid = environment.surrogate().table()) inst.similarity_grid = *grid;
  inst.semantic_aware = cfg.semantic_aware;
  inst.transform_factor_bits = cfg.transform_factor_bits;
  inst.gate_delivery_on_similarity = cfg.gate_delivery_on_similarity;
  inst.qoe_threshold = cfg.qoe_threshold;
  inst.max_power_w = environment.layout().max_power_w;
  apply_default_grids(inst);
  return inst;
}

ObjectiveBreakdown evaluate_objective(const StaticInstance& instance, const Assignment& assignment) {
  check_assignment(instance, assignment);
  return evaluate_beta(instance, assignment, one_hot(instance, assignment));
}

std::vector<env::AgentAction> agent_options(const StaticInstance& inst) {
  const int members = inst.members();
  const auto plan = env::pair_members(members);
  const bool image = plan.has_image_stream();
  const auto roles = plan.roles(members);
  const double limit = inst.max_power_w * (1.0 + 1e-12);
  const int ut0 = inst.u_text_levels.front();
  const int ui0 = inst.u_image_levels.front();

  // Mixed-radix walk over per-member u choices; the last member varies fastest.
  auto for_each_u = [&](const std::vector<bool>& text_free, const std::vector<bool>& image_free,
                        auto&& emit) {
    std::vector<std::size_t> radix;
    for (bool f : text_free) radix.push_back(f ? inst.u_text_levels.size() : 1);
    for (bool f : image_free) radix.push_back(f ? inst.u_image_levels.size() : 1);
    std::vector<std::size_t> digit(radix.size(), 0);
    while (true) {
      std::vector<int> ut(static_cast<std::size_t>(members), ut0);
      std::vector<int> ui(static_cast<std::size_t>(members), ui0);
      for (int j = 0; j < members; ++j) {
        ut[j] = inst.u_text_levels[digit[j]];
        ui[j] = inst.u_image_levels[digit[members + j]];
      }
      emit(ut, ui);
      int pos = static_cast<int>(radix.size()) - 1;
      while (pos >= 0 && ++digit[pos] == radix[pos]) digit[pos--] = 0;
      if (pos < 0) break;
    }
  };

  std::vector<env::AgentAction> out;
  for (int k = 0; k < inst.num_subchannels; ++k) {
    // V2I: only the leader's text stream (first u_text) matters.
    {
      std::vector<bool> tf(static_cast<std::size_t>(members), false);
      if (members > 0) tf[0] = true;
      const std::vector<bool> imf(static_cast<std::size_t>(members), false);
      for (double pt : inst.power_levels) {
        if (pt > limit) continue;
        for_each_u(tf, imf, [&](const std::vector<int>& ut, const std::vector<int>& ui) {
          out.push_back(env::AgentAction{k, false, pt, 0.0, ut, ui});
        });
      }
    }
    // V2V: image power and image u only matter for paired members.
    {
      const std::vector<bool> tf(static_cast<std::size_t>(members), true);
      std::vector<bool> imf(static_cast<std::size_t>(members), false);
      for (int j = 0; j < members; ++j) imf[j] = roles[j] != env::StreamRole::kSingleText;
      const std::vector<double> image_levels = image ? inst.power_levels : std::vector<double>{0.0};
      for (double pt : inst.power_levels) {
        for (double pi : image_levels) {
          if (pt + pi > limit) continue;
          for_each_u(tf, imf, [&](const std::vector<int>& ut, const std::vector<int>& ui) {
            out.push_back(env::AgentAction{k, true, pt, pi, ut, ui});
          });
        }
      }
    }
  }
  return out;
}

std::uint64_t joint_space_size(const StaticInstance& instance) {
  const auto per_agent = static_cast<std::uint64_t>(agent_options(instance).size());
  std::uint64_t total = 1;
  for (int n = 0; n < instance.num_agents; ++n) {
    if (per_agent != 0 && total > UINT64_MAX / per_agent) return UINT64_MAX;
    total *= per_agent;
  }
  return total;
}

OracleResult enumerate_optimum(const StaticInstance& instance, int threads) {
  instance.validate();
  const auto options = agent_options(instance);
  const std::uint64_t total = joint_space_size(instance);
  if (total > instance.enumeration_cap) {
    throw std::length_error("oracle: joint space of " + std::to_string(total) +
                            " assignments exceeds the cap of " +
                            std::to_string(instance.enumeration_cap) +
                            "; coarsen the power/u grids or shrink N, K, M");
  }
  const std::uint64_t per = options.size();
  const int n_agents = instance.num_agents;

  auto decode = [&](std::uint64_t index) {
    Assignment a(static_cast<std::size_t>(n_agents));
    for (int n = n_agents - 1; n >= 0; --n) {
      a[n] = options[index % per];
      index /= per;
    }
    return a;
  };

  struct Best {
    std::uint64_t index = 0;
    double value = -INFINITY;
    bool found = false;
  };
  auto scan = [&](std::uint64_t lo, std::uint64_t hi) {
    Best best;
    const auto beta_template = std::vector<std::vector<double>>(
        n_agents, std::vector<double>(instance.num_subchannels, 0.0));
    for (std::uint64_t i = lo; i < hi; ++i) {
      const Assignment a = decode(i);
      auto beta = beta_template;
      for (int n = 0; n < n_agents; ++n) beta[n][a[n].subchannel] = 1.0;
      const double v = evaluate_beta(instance, a, beta).total;
      if (!best.found || v > best.value) best = Best{i, v, true};
    }
    return best;
  };

  threads = std::max(1, threads);
  Best best;
  if (threads == 1 || total < 1024) {
    best = scan(0, total);
  } else {
    std::vector<std::future<Best>> jobs;
    const std::uint64_t chunk = (total + threads - 1) / threads;
    for (std::uint64_t lo = 0; lo < total; lo += chunk) {
      jobs.push_back(std::async(std::launch::async, scan, lo, std::min(total, lo + chunk)));
    }
    // Chunks are reduced in order with strict >, so the earliest maximiser wins.
    for (auto& j : jobs) {
      const Best b = j.get();
      if (b.found && (!best.found || b.value > best.value)) best = b;
    }
  }
  OracleResult result;
  result.assignment = decode(best.index);
  result.breakdown = evaluate_objective(instance, result.assignment);
  result.evaluated = total;
  return result;
}

Assignment random_assignment(const StaticInstance& instance, Rng& rng) {
  const auto options = agent_options(instance);
  Assignment a;
  for (int n = 0; n < instance.num_agents; ++n) a.push_back(options[rng.index(options.size())]);
  return a;
}

double relaxed_objective(const StaticInstance& instance, const Assignment& assignment,
                         const std::vector<std::vector<double>>& beta) {
  require(static_cast<int>(beta.size()) == instance.num_agents, "beta needs one row per agent");
  for (const auto& row : beta) {
    require(static_cast<int>(row.size()) == instance.num_subchannels, "beta row size mismatch");
    for (double b : row) require(b >= 0.0 && b <= 1.0, "beta entries must lie in [0, 1]");
  }
  require(static_cast<int>(assignment.size()) == instance.num_agents, "assignment size mismatch");
  return evaluate_beta(instance, assignment, beta).total;
}

std::vector<int> threshold_beta(const std::vector<std::vector<double>>& beta, ThresholdRule rule) {
  std::vector<int> out;
  for (const auto& row : beta) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(row.size()); ++k) {
      if (row[k] > row[best]) best = k;
    }
    if (rule == ThresholdRule::kHalf) {
      for (int k = 0; k < static_cast<int>(row.size()); ++k) {
        if (row[k] >= 0.5) {
          best = k;
          break;
        }
      }
    }
    out.push_back(best);
  }
  return out;
}

RelaxationReport relaxation_gap(const StaticInstance& instance, const Assignment& assignment,
                                const std::vector<std::vector<double>>& beta, ThresholdRule rule) {
  RelaxationReport r;
  r.relaxed = relaxed_objective(instance, assignment, beta);
  r.subchannels = threshold_beta(beta, rule);
  Assignment hard = assignment;
  for (std::size_t n = 0; n < hard.size(); ++n) hard[n].subchannel = r.subchannels[n];
  r.thresholded = evaluate_beta(instance, hard, one_hot(instance, hard)).total;
  r.gap = r.relaxed - r.thresholded;
  return r;
}

}  // namespace samra::oracle
