#include "samra/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace samra::harness {

namespace {

using Getter = std::function<std::string(const RunConfig&)>;
using Setter = std::function<void(RunConfig&, const std::string&)>;

struct Field {
  FieldInfo info;
  Getter get;
  Setter set;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a finite number, got '" + text + "'");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

struct Range {
  double lo = -INFINITY;
  double hi = INFINITY;
  bool lo_open = false;
};

void check_range(const std::string& key, double v, Range r) {
  const bool low_ok = r.lo_open ? v > r.lo : v >= r.lo;
  if (!low_ok || v > r.hi) {
    std::string lo = std::isinf(r.lo) ? "-inf" : fmt(r.lo);
    std::string hi = std::isinf(r.hi) ? "inf" : fmt(r.hi);
    throw ConfigError(key, "value " + fmt(v) + " outside " + (r.lo_open ? "(" : "[") + lo + ", " +
                               hi + "]");
  }
}

std::vector<Field> build_fields() {
  std::vector<Field> f;
  auto path = [](const std::string& s, const std::string& k) { return s + "." + k; };

  auto num = [&](const std::string& s, const std::string& k, Source src, auto member, Range r) {
    const std::string key = path(s, k);
    f.push_back(Field{{s, k, src},
                      [member](const RunConfig& c) { return fmt(member(const_cast<RunConfig&>(c))); },
                      [member, key, r](RunConfig& c, const std::string& t) {
                        const double v = parse_double(key, t);
                        check_range(key, v, r);
                        member(c) = v;
                      }});
  };
  auto integer = [&](const std::string& s, const std::string& k, Source src, auto member, Range r) {
    const std::string key = path(s, k);
    f.push_back(Field{{s, k, src},
                      [member](const RunConfig& c) {
                        return std::to_string(member(const_cast<RunConfig&>(c)));
                      },
                      [member, key, r](RunConfig& c, const std::string& t) {
                        const long long v = parse_int(key, t);
                        check_range(key, static_cast<double>(v), r);
                        member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(v);
                      }});
  };
  auto flag = [&](const std::string& s, const std::string& k, Source src, auto member) {
    const std::string key = path(s, k);
    f.push_back(Field{{s, k, src},
                      [member](const RunConfig& c) {
                        return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false");
                      },
                      [member, key](RunConfig& c, const std::string& t) { member(c) = parse_bool(key, t); }});
  };
  auto text = [&](const std::string& s, const std::string& k, Source src, auto member) {
    f.push_back(Field{{s, k, src},
                      [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); },
                      [member](RunConfig& c, const std::string& t) { member(c) = trim(t); }});
  };
  auto int_list = [&](const std::string& s, const std::string& k, Source src, auto member, Range r) {
    const std::string key = path(s, k);
    f.push_back(Field{{s, k, src},
                      [member](const RunConfig& c) {
                        std::string out;
                        for (int v : member(const_cast<RunConfig&>(c))) {
                          if (!out.empty()) out += ", ";
                          out += std::to_string(v);
                        }
                        return out;
                      },
                      [member, key, r](RunConfig& c, const std::string& t) {
                        std::vector<int> out;
                        for (const auto& item : split_list(t)) {
                          const long long v = parse_int(key, item);
                          check_range(key, static_cast<double>(v), r);
                          out.push_back(static_cast<int>(v));
                        }
                        member(c) = out;
                      }});
  };
  auto num_list = [&](const std::string& s, const std::string& k, Source src, auto member) {
    const std::string key = path(s, k);
    f.push_back(Field{{s, k, src},
                      [member](const RunConfig& c) {
                        std::string out;
                        for (double v : member(const_cast<RunConfig&>(c))) {
                          if (!out.empty()) out += ", ";
                          out += fmt(v);
                        }
                        return out;
                      },
                      [member, key](RunConfig& c, const std::string& t) {
                        std::vector<double> out;
                        for (const auto& item : split_list(t)) out.push_back(parse_double(key, item));
                        member(c) = out;
                      }});
  };
  auto text_list = [&](const std::string& s, const std::string& k, Source src, auto member) {
    f.push_back(Field{{s, k, src},
                      [member](const RunConfig& c) {
                        std::string out;
                        for (const auto& v : member(const_cast<RunConfig&>(c))) {
                          if (!out.empty()) out += ", ";
                          out += v;
                        }
                        return out;
                      },
                      [member](RunConfig& c, const std::string& t) { member(c) = split_list(t); }});
  };

  const Range any{};
  const Range positive{0.0, INFINITY, true};
  const Range nonneg{0.0, INFINITY};
  const Range at_least_one{1.0, INFINITY};
  const Range unit{0.0, 1.0};
  const auto T1 = Source::kTable1;
  const auto T2 = Source::kTable2;
  const auto L = Source::kLedger;

#define SC(field) [](RunConfig& c) -> auto& { return c.env.scenario.field; }
  num("scenario", "map_width_m", L, SC(map_width_m), Range{1299.0, INFINITY});
  num("scenario", "map_height_m", L, SC(map_height_m), Range{750.0, INFINITY});
  num("scenario", "lane_width_m", L, SC(lane_width_m), positive);
  num("scenario", "intersection_spacing_m", L, SC(intersection_spacing_m), positive);
  integer("scenario", "lanes_per_direction", L, SC(lanes_per_direction), at_least_one);
  integer("scenario", "num_platoons", T1, SC(num_platoons), at_least_one);
  integer("scenario", "platoon_size", T1, SC(platoon_size), at_least_one);
  num("scenario", "platoon_gap", T1, SC(platoon_gap_m), Range{5.0, 35.0});
  num("scenario", "speed_mps", T1, SC(speed_mps), nonneg);
  num("scenario", "carrier_ghz", T1, SC(carrier_ghz), positive);
  integer("scenario", "num_subchannels", T1, SC(num_subchannels), at_least_one);
  num("scenario", "subchannel_bandwidth_hz", T1, SC(subchannel_bandwidth_hz), positive);
  num("scenario", "max_power_dbm", T1, SC(max_power_dbm), any);
  num("scenario", "noise_power_dbm", T1, SC(noise_power_dbm), any);
  num("scenario", "bs_antenna_height_m", T1, SC(bs_antenna_height_m), nonneg);
  num("scenario", "vehicle_antenna_height_m", T1, SC(vehicle_antenna_height_m), nonneg);
  num("scenario", "bs_antenna_gain_dbi", T1, SC(bs_antenna_gain_dbi), any);
  num("scenario", "vehicle_antenna_gain_dbi", T1, SC(vehicle_antenna_gain_dbi), any);
  num("scenario", "bs_noise_figure_db", T1, SC(bs_noise_figure_db), nonneg);
  num("scenario", "vehicle_noise_figure_db", T1, SC(vehicle_noise_figure_db), nonneg);
  num("scenario", "v2i_shadow_std_db", T1, SC(v2i_shadow_std_db), nonneg);
  num("scenario", "v2v_shadow_std_db", T1, SC(v2v_shadow_std_db), nonneg);
  num("scenario", "v2i_decorrelation_m", T1, SC(v2i_decorrelation_m), positive);
  num("scenario", "v2v_decorrelation_m", T1, SC(v2v_decorrelation_m), positive);
  num("scenario", "min_link_distance_m", L, SC(min_link_distance_m), positive);
  integer("scenario", "large_scale_period_slots", T1, SC(large_scale_period_slots), at_least_one);
  integer("scenario", "fast_fading_period_slots", T1, SC(fast_fading_period_slots), at_least_one);
  num("scenario", "slot_duration_s", L, SC(slot_duration_s), positive);
#undef SC
  // Optional base station position; "center" keeps the map centre.
  f.push_back(Field{{"scenario", "bs_position", L},
                    [](const RunConfig& c) {
                      const auto& p = c.env.scenario.bs_position;
                      return p ? fmt(p->x) + ", " + fmt(p->y) : std::string("center");
                    },
                    [](RunConfig& c, const std::string& t) {
                      if (trim(t) == "center") {
                        c.env.scenario.bs_position.reset();
                        return;
                      }
                      const auto items = split_list(t);
                      if (items.size() != 2) {
                        throw ConfigError("scenario.bs_position", "expected 'x, y' or 'center'");
                      }
                      c.env.scenario.bs_position =
                          channel::Vec2{parse_double("scenario.bs_position", items[0]),
                                        parse_double("scenario.bs_position", items[1])};
                    }});

#define SM(field) [](RunConfig& c) -> auto& { return c.env.semantic.field; }
  num("semantic", "entropy_sm", L, SM(entropy_sm), positive);
  num("semantic", "entropy_mm_text", L, SM(entropy_mm_text), positive);
  num("semantic", "entropy_mm_image", L, SM(entropy_mm_image), positive);
  num("semantic", "bandwidth_hz", T1, SM(bandwidth_hz), positive);
  integer("semantic", "u_max_text", T1, SM(u_max_text), at_least_one);
  integer("semantic", "u_max_image", T1, SM(u_max_image), at_least_one);
  num("semantic", "payload_min_suts", T1, SM(payload_min_suts), nonneg);
  num("semantic", "payload_max_suts", T1, SM(payload_max_suts), nonneg);
  num("semantic", "delivery_window_s", L, SM(delivery_window_s), positive);
  num("semantic", "logistic_scale", L, SM(logistic_scale), positive);
  num("semantic", "objective_weight", L, SM(objective_weight), nonneg);
  num("semantic", "reward_weight_srs", L, SM(reward_weight_srs), any);
  num("semantic", "reward_weight_qoe", L, SM(reward_weight_qoe), any);
#undef SM
#define SIM(field) [](RunConfig& c) -> auto& { return c.env.similarity.field; }
  num("semantic", "similarity_sinr_slope", L, SIM(sinr_slope), positive);
  num("semantic", "similarity_midpoint_db", L, SIM(midpoint_db), any);
  num("semantic", "similarity_midpoint_slope_db", L, SIM(midpoint_slope_db), any);
  num("semantic", "similarity_length_saturation", L, SIM(length_saturation), positive);
#undef SIM
  text("semantic", "similarity_table", L, [](RunConfig& c) -> auto& { return c.env.similarity_table_path; });

#define PR(field) [](RunConfig& c) -> auto& { return c.env.profiles.field; }
  num("env", "rate_weight_min", T1, PR(rate_weight_min), unit);
  num("env", "rate_weight_max", T1, PR(rate_weight_max), unit);
  num("env", "similarity_target_min", T1, PR(similarity_target_min), unit);
  num("env", "similarity_target_max", T1, PR(similarity_target_max), unit);
  num("env", "text_rate_target_min_ksuts", T1, PR(text_rate_target_min_ksuts), nonneg);
  num("env", "text_rate_target_max_ksuts", T1, PR(text_rate_target_max_ksuts), nonneg);
  num("env", "image_rate_target_min_ksuts", T1, PR(image_rate_target_min_ksuts), nonneg);
  num("env", "image_rate_target_max_ksuts", T1, PR(image_rate_target_max_ksuts), nonneg);
  num("env", "rate_slope_mean", T1, PR(rate_slope_mean), positive);
  num("env", "rate_slope_std", T1, PR(rate_slope_std), nonneg);
  num("env", "similarity_slope_mean", T1, PR(similarity_slope_mean), positive);
  num("env", "similarity_slope_std", T1, PR(similarity_slope_std), nonneg);
#undef PR
#define OS(field) [](RunConfig& c) -> auto& { return c.env.scaling.field; }
  num("env", "obs_gain_offset_db", L, OS(gain_offset_db), any);
  num("env", "obs_gain_scale_db", L, OS(gain_scale_db), positive);
  num("env", "obs_interference_scale_db", L, OS(interference_scale_db), positive);
  num("env", "obs_payload_scale_suts", L, OS(payload_scale_suts), positive);
#undef OS
#define EN(field) [](RunConfig& c) -> auto& { return c.env.field; }
  flag("env", "semantic_aware", L, EN(semantic_aware));
  num("env", "transform_factor_bits", L, EN(transform_factor_bits), at_least_one);
  flag("env", "negative_srs_reward", L, EN(negative_srs_reward));
  flag("env", "gate_delivery_on_similarity", L, EN(gate_delivery_on_similarity));
  num("env", "qoe_threshold", T1, EN(qoe_threshold), unit);
#undef EN

#define LR(field) [](RunConfig& c) -> auto& { return c.learner.field; }
  int_list("learner", "actor_hidden", T2, LR(actor_hidden), at_least_one);
  int_list("learner", "local_critic_hidden", T2, LR(local_critic_hidden), at_least_one);
  int_list("learner", "global_critic_hidden", T2, LR(global_critic_hidden), at_least_one);
  num("learner", "critic_learning_rate", T2, LR(critic_learning_rate), nonneg);
  num("learner", "actor_learning_rate", T2, LR(actor_learning_rate), nonneg);
  num("learner", "discount", T2, LR(discount), unit);
  num("learner", "soft_update_rate", T2, LR(soft_update_rate), Range{0.0, 1.0, true});
  integer("learner", "buffer_capacity", T2, LR(buffer_capacity), at_least_one);
  integer("learner", "batch_size", T2, LR(batch_size), at_least_one);
  integer("learner", "update_threshold", L, LR(update_threshold), nonneg);
  integer("learner", "policy_delay", T2, LR(policy_delay), at_least_one);
  num("learner", "exploration_std", T2, LR(exploration_std), nonneg);
  num("learner", "local_critic_weight", L, LR(local_critic_weight), any);
  flag("learner", "local_critics_every_step", L, LR(local_critics_every_step));
  num("learner", "smoothing_std", L, LR(smoothing_std), nonneg);
  num("learner", "smoothing_clip", L, LR(smoothing_clip), nonneg);
  flag("learner", "parallel_updates", L, LR(parallel_updates));
#undef LR

#define SW(field) [](RunConfig& c) -> auto& { return c.sweep.field; }
  text("sweep", "parameter", L, SW(parameter));
  num_list("sweep", "values", L, SW(values));
  text_list("sweep", "algorithms", L, SW(algorithms));
  integer("sweep", "episodes_per_point", L, SW(episodes_per_point), nonneg);
  integer("sweep", "seeds_per_point", L, SW(seeds_per_point), at_least_one);
  text("sweep", "custom_key", L, SW(custom_key));
  integer("sweep", "jobs", L, SW(jobs), at_least_one);
#undef SW

#define RN(field) [](RunConfig& c) -> auto& { return c.run.field; }
  f.push_back(Field{{"run", "algorithm", L},
                    [](const RunConfig& c) { return c.run.algorithm; },
                    [](RunConfig& c, const std::string& t) {
                      try {
                        c.run.algorithm = marl::to_string(marl::parse_algorithm(t));
                      } catch (const std::invalid_argument& e) {
                        throw ConfigError("run.algorithm", e.what());
                      }
                    }});
  f.push_back(Field{{"run", "seed", L},
                    [](const RunConfig& c) { return std::to_string(c.run.seed); },
                    [](RunConfig& c, const std::string& t) { c.run.seed = parse_u64("run.seed", t); }});
  integer("run", "episodes", T2, RN(episodes), nonneg);
  integer("run", "eval_episodes", L, RN(eval_episodes), nonneg);
  text("run", "output_dir", L, RN(output_dir));
  flag("run", "deterministic", L, RN(deterministic));
  flag("run", "trace", L, RN(trace));
  flag("run", "save_checkpoint", L, RN(save_checkpoint));
  text("run", "checkpoint_in", L, RN(checkpoint_in));
  flag("run", "eval_only", L, RN(eval_only));
#undef RN
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = build_fields();
  return table;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields()) {
    if (f.info.section == section && f.info.key == key) return &f;
  }
  return nullptr;
}

const Field& require_field(const std::string& path) {
  const auto dot = path.find('.');
  if (dot == std::string::npos) throw ConfigError(path, "expected section.key");
  const Field* f = find_field(path.substr(0, dot), path.substr(dot + 1));
  if (!f) throw ConfigError(path, "unknown key");
  return *f;
}

std::string emit_sections(const RunConfig& c, const std::vector<std::string>& sections,
                          const std::vector<std::string>& skip) {
  std::string out;
  for (const auto& s : sections) {
    out += "[" + s + "]\n";
    std::string ledger;
    for (const auto& f : fields()) {
      if (f.info.section != s) continue;
      const std::string path = s + "." + f.info.key;
      if (std::find(skip.begin(), skip.end(), path) != skip.end()) continue;
      out += f.info.key + " = " + f.get(c) + "\n";
      if (f.info.source == Source::kLedger) ledger += (ledger.empty() ? "" : ", ") + f.info.key;
    }
    if (!ledger.empty()) out += "# ledger: " + ledger + "\n";
    out += "\n";
  }
  return out;
}

const std::vector<std::string> kSections{"scenario", "semantic", "env", "learner", "sweep", "run"};

}  // namespace

const std::vector<FieldInfo>& config_fields() {
  static const std::vector<FieldInfo> infos = [] {
    std::vector<FieldInfo> out;
    for (const auto& f : fields()) out.push_back(f.info);
    return out;
  }();
  return infos;
}

void set_field(RunConfig& config, const std::string& path, const std::string& value) {
  require_field(path).set(config, value);
}

std::string get_field(const RunConfig& config, const std::string& path) {
  return require_field(path).get(config);
}

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig config;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      // Bare key outside any section: resolve by unique key name.
      const Field* match = nullptr;
      for (const auto& f : fields()) {
        if (f.info.key != name) continue;
        if (match) throw ConfigError(name, "ambiguous key; qualify it with a [section]");
        match = &f;
      }
      if (!match) throw ConfigError(name, "unknown key");
      match->set(config, node.data());
      continue;
    }
    if (std::find(kSections.begin(), kSections.end(), name) == kSections.end()) {
      throw ConfigError(name, "unknown section");
    }
    for (const auto& [key, leaf] : node) {
      const Field* f = find_field(name, key);
      if (!f) throw ConfigError(name + "." + key, "unknown key");
      f->set(config, leaf.data());
    }
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const RunConfig& config) { return emit_sections(config, kSections, {}); }

std::string config_hash(const RunConfig& config) {
  const std::string text =
      emit_sections(config, kSections,
                    {"run.seed", "run.output_dir", "run.deterministic", "run.trace", "sweep.jobs"});
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

std::string scenario_hash(const RunConfig& config) {
  std::string text = emit_sections(config, {"scenario", "semantic", "env"}, {"env.semantic_aware"});
  text += "episodes = " + std::to_string(config.run.episodes) + "\n";
  text += "eval_episodes = " + std::to_string(config.run.eval_episodes) + "\n";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

void validate(const RunConfig& config) {
  try {
    config.env.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    throw ConfigError(colon == std::string::npos ? "" : what.substr(0, colon),
                      colon == std::string::npos ? what : what.substr(colon + 2));
  }
  const auto& p = config.env.profiles;
  if (p.rate_weight_min > p.rate_weight_max) throw ConfigError("env.rate_weight_min", "exceeds max");
  if (p.similarity_target_min > p.similarity_target_max) {
    throw ConfigError("env.similarity_target_min", "exceeds max");
  }
  try {
    marl::parse_algorithm(config.run.algorithm);
    for (const auto& a : config.sweep.algorithms) marl::parse_algorithm(a);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("run.algorithm", e.what());
  }
  const auto& l = config.learner;
  if (l.actor_hidden.empty() || l.local_critic_hidden.empty() || l.global_critic_hidden.empty()) {
    throw ConfigError("learner.actor_hidden", "hidden layer lists must be non-empty");
  }
  if (l.batch_size > l.buffer_capacity) {
    throw ConfigError("learner.batch_size", "must not exceed buffer_capacity");
  }
  if (config.run.eval_only && config.run.checkpoint_in.empty()) {
    throw ConfigError("run.checkpoint_in", "eval_only needs a checkpoint");
  }
}

}  // namespace samra::harness
