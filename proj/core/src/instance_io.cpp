#include <fstream>
#include <sstream>
#include <stdexcept>

#include "samra/oracle.hpp"

namespace samra::oracle {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json profile_json(const semantics::QoEProfile& p) {
  return json{{"rate_weight", p.rate_weight},
              {"rate_target_ksuts", p.rate_target_ksuts},
              {"similarity_target", p.similarity_target},
              {"rate_slope", p.rate_slope},
              {"similarity_slope", p.similarity_slope}};
}

semantics::QoEProfile profile_from(const json& j) {
  semantics::QoEProfile p;
  p.rate_weight = j.at("rate_weight").get<double>();
  p.rate_target_ksuts = j.at("rate_target_ksuts").get<double>();
  p.similarity_target = j.at("similarity_target").get<double>();
  p.rate_slope = j.at("rate_slope").get<double>();
  p.similarity_slope = j.at("similarity_slope").get<double>();
  return p;
}

json action_json(const env::AgentAction& a) {
  return json{{"subchannel", a.subchannel}, {"v2v", a.v2v},
              {"text_power_w", a.text_power_w}, {"image_power_w", a.image_power_w},
              {"u_text", a.u_text}, {"u_image", a.u_image}};
}

}  // namespace

json to_json(const StaticInstance& inst) {
  const auto& ch = inst.channel;
  const auto& s = inst.semantic;
  json j;
  j["format"] = "samra-instance";
  j["version"] = kFormatVersion;
  j["channel"] = {{"transmitters", ch.num_transmitters()}, {"receivers", ch.num_receivers()},
                  {"subchannels", ch.num_subchannels()}, {"noise_w", ch.noise_w()},
                  {"slot", ch.slot()}, {"gains", ch.raw()}};
  j["num_agents"] = inst.num_agents;
  j["num_subchannels"] = inst.num_subchannels;
  j["platoons"] = inst.platoons;
  json profiles = json::array();
  for (const auto& row : inst.profiles) {
    json r = json::array();
    for (const auto& p : row) r.push_back(profile_json(p));
    profiles.push_back(r);
  }
  j["profiles"] = profiles;
  j["payload_suts"] = inst.payload_suts;
  j["semantic"] = {{"entropy_sm", s.entropy_sm}, {"entropy_mm_text", s.entropy_mm_text},
                   {"entropy_mm_image", s.entropy_mm_image}, {"bandwidth_hz", s.bandwidth_hz},
                   {"u_max_text", s.u_max_text}, {"u_max_image", s.u_max_image},
                   {"payload_min_suts", s.payload_min_suts}, {"payload_max_suts", s.payload_max_suts},
                   {"delivery_window_s", s.delivery_window_s}, {"logistic_scale", s.logistic_scale},
                   {"objective_weight", s.objective_weight},
                   {"reward_weight_srs", s.reward_weight_srs},
                   {"reward_weight_qoe", s.reward_weight_qoe}};
  j["similarity"] = {{"sinr_slope", inst.similarity.sinr_slope},
                     {"midpoint_db", inst.similarity.midpoint_db},
                     {"midpoint_slope_db", inst.similarity.midpoint_slope_db},
                     {"length_saturation", inst.similarity.length_saturation}};
  if (inst.similarity_grid) {
    j["similarity_grid"] = {{"u_values", inst.similarity_grid->u_values},
                            {"sinr_db", inst.similarity_grid->sinr_db},
                            {"cells", inst.similarity_grid->cells}};
  }
  j["semantic_aware"] = inst.semantic_aware;
  j["transform_factor_bits"] = inst.transform_factor_bits;
  j["gate_delivery_on_similarity"] = inst.gate_delivery_on_similarity;
  j["qoe_threshold"] = inst.qoe_threshold;
  j["max_power_w"] = inst.max_power_w;
  j["power_levels"] = inst.power_levels;
  j["u_text_levels"] = inst.u_text_levels;
  j["u_image_levels"] = inst.u_image_levels;
  j["enumeration_cap"] = inst.enumeration_cap;
  return j;
}

StaticInstance instance_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "samra-instance" ||
        j.at("version").get<int>() != kFormatVersion) {
      throw std::invalid_argument("instance: unsupported format or version");
    }
    StaticInstance inst;
    const auto& c = j.at("channel");
    inst.channel = channel::ChannelRealization(c.at("transmitters").get<int>(),
                                               c.at("receivers").get<int>(),
                                               c.at("subchannels").get<int>(),
                                               c.at("noise_w").get<double>());
    inst.channel.set_slot(c.at("slot").get<std::int64_t>());
    const auto gains = c.at("gains").get<std::vector<double>>();
    if (gains.size() != inst.channel.raw().size()) {
      throw std::invalid_argument("instance: gain count does not match channel shape");
    }
    std::size_t i = 0;
    for (int t = 0; t < inst.channel.num_transmitters(); ++t) {
      for (int r = 0; r < inst.channel.num_receivers(); ++r) {
        for (int k = 0; k < inst.channel.num_subchannels(); ++k) inst.channel.set_gain(t, r, k, gains[i++]);
      }
    }
    inst.num_agents = j.at("num_agents").get<int>();
    inst.num_subchannels = j.at("num_subchannels").get<int>();
    inst.platoons = j.at("platoons").get<std::vector<std::vector<int>>>();
    for (const auto& row : j.at("profiles")) {
      std::vector<semantics::QoEProfile> r;
      for (const auto& p : row) r.push_back(profile_from(p));
      inst.profiles.push_back(std::move(r));
    }
    inst.payload_suts = j.at("payload_suts").get<double>();
    const auto& s = j.at("semantic");
    auto& sem = inst.semantic;
    sem.entropy_sm = s.at("entropy_sm").get<double>();
    sem.entropy_mm_text = s.at("entropy_mm_text").get<double>();
    sem.entropy_mm_image = s.at("entropy_mm_image").get<double>();
    sem.bandwidth_hz = s.at("bandwidth_hz").get<double>();
    sem.u_max_text = s.at("u_max_text").get<int>();
    sem.u_max_image = s.at("u_max_image").get<int>();
    sem.payload_min_suts = s.at("payload_min_suts").get<double>();
    sem.payload_max_suts = s.at("payload_max_suts").get<double>();
    sem.delivery_window_s = s.at("delivery_window_s").get<double>();
    sem.logistic_scale = s.at("logistic_scale").get<double>();
    sem.objective_weight = s.at("objective_weight").get<double>();
    sem.reward_weight_srs = s.at("reward_weight_srs").get<double>();
    sem.reward_weight_qoe = s.at("reward_weight_qoe").get<double>();
    const auto& sim = j.at("similarity");
    inst.similarity.sinr_slope = sim.at("sinr_slope").get<double>();
    inst.similarity.midpoint_db = sim.at("midpoint_db").get<double>();
    inst.similarity.midpoint_slope_db = sim.at("midpoint_slope_db").get<double>();
    inst.similarity.length_saturation = sim.at("length_saturation").get<double>();
    if (j.contains("similarity_grid")) {
      const auto& g = j.at("similarity_grid");
      inst.similarity_grid = semantics::SimilarityGrid{g.at("u_values").get<std::vector<double>>(),
                                                       g.at("sinr_db").get<std::vector<double>>(),
                                                       g.at("cells").get<std::vector<double>>()};
    }
    inst.semantic_aware = j.at("semantic_aware").get<bool>();
    inst.transform_factor_bits = j.at("transform_factor_bits").get<double>();
    inst.gate_delivery_on_similarity = j.at("gate_delivery_on_similarity").get<bool>();
    inst.qoe_threshold = j.at("qoe_threshold").get<double>();
    inst.max_power_w = j.at("max_power_w").get<double>();
    inst.power_levels = j.at("power_levels").get<std::vector<double>>();
    inst.u_text_levels = j.at("u_text_levels").get<std::vector<int>>();
    inst.u_image_levels = j.at("u_image_levels").get<std::vector<int>>();
    inst.enumeration_cap = j.at("enumeration_cap").get<std::uint64_t>();
    inst.validate();
    return inst;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("instance: ") + e.what());
  }
}

json to_json(const Assignment& assignment) {
  json out = json::array();
  for (const auto& a : assignment) out.push_back(action_json(a));
  return out;
}

Assignment assignment_from_json(const json& j) {
  try {
    Assignment out;
    for (const auto& a : j) {
      out.push_back(env::AgentAction{a.at("subchannel").get<int>(), a.at("v2v").get<bool>(),
                                     a.at("text_power_w").get<double>(),
                                     a.at("image_power_w").get<double>(),
                                     a.at("u_text").get<std::vector<int>>(),
                                     a.at("u_image").get<std::vector<int>>()});
    }
    return out;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("assignment: ") + e.what());
  }
}

json to_json(const ObjectiveBreakdown& b) {
  const auto& v = b.violations;
  return json{{"total", b.total},
              {"lambda", b.lambda},
              {"platoon_qoe", b.platoon_qoe},
              {"platoon_logistic", b.platoon_logistic},
              {"violations",
               {{"binary_assignment", v.binary_assignment},
                {"shared_subchannel", v.shared_subchannel},
                {"multiple_subchannels", v.multiple_subchannels},
                {"text_symbol_bounds", v.text_symbol_bounds},
                {"image_symbol_bounds", v.image_symbol_bounds},
                {"power_box", v.power_box},
                {"score_threshold", v.score_threshold},
                {"payload_bound", v.payload_bound}}}};
}

json to_json(const OracleResult& r) {
  return json{{"format", "samra-oracle-result"},
              {"version", kFormatVersion},
              {"assignment", to_json(r.assignment)},
              {"breakdown", to_json(r.breakdown)},
              {"evaluated", r.evaluated}};
}

void save_instance(const std::filesystem::path& path, const StaticInstance& instance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(instance).dump(1) << '\n';
}

StaticInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return instance_from_json(j);
}

}  // namespace samra::oracle
