#include "samra/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <stdexcept>

namespace samra::semantics {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Index i such that axis[i] <= x <= axis[i+1], clamped to the grid.
std::size_t bracket(const std::vector<double>& axis, double x) {
  if (axis.size() < 2) return 0;
  const auto it = std::upper_bound(axis.begin(), axis.end(), x);
  std::size_t i = it == axis.begin() ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
  return std::min(i, axis.size() - 2);
}

double interpolate(const SimilarityGrid& g, double u, double sinr_db) {
  const std::size_t rows = g.u_values.size();
  const std::size_t cols = g.sinr_db.size();
  u = std::clamp(u, g.u_values.front(), g.u_values.back());
  sinr_db = std::clamp(sinr_db, g.sinr_db.front(), g.sinr_db.back());

  std::size_t r = 0;
  double tu = 0.0;
  if (rows > 1) {
    r = bracket(g.u_values, u);
    tu = (u - g.u_values[r]) / (g.u_values[r + 1] - g.u_values[r]);
  }
  std::size_t c = 0;
  double ts = 0.0;
  if (cols > 1) {
    c = bracket(g.sinr_db, sinr_db);
    ts = (sinr_db - g.sinr_db[c]) / (g.sinr_db[c + 1] - g.sinr_db[c]);
  }
  const std::size_t r1 = rows > 1 ? r + 1 : r;
  const std::size_t c1 = cols > 1 ? c + 1 : c;
  const double top = (1.0 - ts) * g.cell(r, c) + ts * g.cell(r, c1);
  const double bottom = (1.0 - ts) * g.cell(r1, c) + ts * g.cell(r1, c1);
  return std::clamp((1.0 - tu) * top + tu * bottom, 0.0, 1.0);
}

}  // namespace

SimilaritySurrogate::SimilaritySurrogate() : SimilaritySurrogate(AnalyticSimilarity{}) {}

SimilaritySurrogate::SimilaritySurrogate(AnalyticSimilarity params, SimilarityMode mode)
    : analytic_(params),
      mode_(mode),
      clamp_warnings_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  if (!(params.sinr_slope > 0.0) || !(params.length_saturation > 0.0) ||
      params.midpoint_slope_db < 0.0) {
    throw std::invalid_argument(
        "SimilaritySurrogate: slopes must be positive and the midpoint nonincreasing in u");
  }
}

SimilaritySurrogate::SimilaritySurrogate(SimilarityGrid grid, SimilarityMode mode)
    : table_(std::make_shared<const SimilarityGrid>(std::move(grid))),
      mode_(mode),
      clamp_warnings_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

double SimilaritySurrogate::evaluate(double u, double sinr) const {
  if (table_) {
    if (u < table_->u_values.front() || u > table_->u_values.back()) {
      clamp_warnings_->fetch_add(1, std::memory_order_relaxed);
    }
    const double sinr_db =
        sinr > 0.0 ? 10.0 * std::log10(sinr) : -std::numeric_limits<double>::infinity();
    return interpolate(*table_, u, sinr_db);
  }
  if (!(sinr > 0.0)) return 0.0;
  const double sinr_db = 10.0 * std::log10(sinr);
  const double saturation = 1.0 - std::exp(-analytic_.length_saturation * u);
  const double midpoint = analytic_.midpoint_db - analytic_.midpoint_slope_db * u;
  return std::clamp(saturation * logistic(analytic_.sinr_slope * (sinr_db - midpoint)), 0.0,
                    1.0);
}

double similarity_sm(const SimilaritySurrogate& surrogate, double u_text, double sinr) {
  if (u_text < 1.0) throw std::invalid_argument("similarity_sm: u must be >= 1");
  return surrogate.evaluate(u_text, sinr);
}

double similarity_mm(const SimilaritySurrogate& surrogate, double u_text, double u_image,
                     double sinr_text, double sinr_image) {
  if (u_text < 1.0 || u_image < 1.0) {
    throw std::invalid_argument("similarity_mm: u must be >= 1");
  }
  const double text = surrogate.evaluate(u_text, sinr_text);
  const double image = surrogate.evaluate(u_image, sinr_image);
  return std::sqrt(text * image);
}

double semantic_rate(double bandwidth_hz, double entropy_suts_per_word, double u) {
  if (u < 1.0) throw std::invalid_argument("semantic_rate: u must be >= 1");
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("semantic_rate: W must be > 0");
  if (entropy_suts_per_word < 0.0) throw std::invalid_argument("semantic_rate: H must be >= 0");
  return bandwidth_hz * entropy_suts_per_word / u;
}

double score_sigmoid(double x, double target, double slope) {
  return 1.0 / (1.0 + std::exp(slope * (target - x)));
}

double qoe_platoon(std::span<const QoEProfile> profiles, std::span<const ServiceLevel> service) {
  if (profiles.size() != service.size()) {
    throw std::invalid_argument("qoe_platoon: " + std::to_string(profiles.size()) +
                                " profiles but " + std::to_string(service.size()) +
                                " service levels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const QoEProfile& p = profiles[i];
    const double rate_score =
        score_sigmoid(service[i].rate_suts_per_s / 1000.0, p.rate_target_ksuts, p.rate_slope);
    const double accuracy_score =
        score_sigmoid(service[i].similarity, p.similarity_target, p.similarity_slope);
    total += p.rate_weight * rate_score + (1.0 - p.rate_weight) * accuracy_score;
  }
  return total;
}

double srs_logistic(double delivered_rate, double payload, double window_s, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("srs_logistic: alpha must be > 0");
  return 1.0 / (1.0 + std::exp(-alpha * (delivered_rate - payload / window_s)));
}

int srs_hard(double cumulative_delivered, double payload) {
  return cumulative_delivered >= payload ? 1 : 0;
}

double qoe_traditional(double bandwidth_hz, double entropy, double u_bits_per_word) {
  if (u_bits_per_word < 1.0) {
    throw std::invalid_argument("qoe_traditional: transform factor must be >= 1 bit/word");
  }
  return bandwidth_hz * entropy / u_bits_per_word;
}

}  // namespace samra::semantics
