#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace samra::semantics {

/// Analytic similarity surrogate:
///   xi(u, sinr) = (1 - exp(-c*u)) * logistic(a * (sinr_db - (b0 - b1*u)))
struct AnalyticSimilarity {
  double sinr_slope = 0.5;          // a, per dB
  double midpoint_db = 10.0;        // b0
  double midpoint_slope_db = 0.2;   // b1, dB per (sut/word)
  double length_saturation = 0.3;   // c
};

/// Grid of similarity values over (u, SINR dB) with bilinear interpolation.
struct SimilarityGrid {
  std::vector<double> u_values;     // strictly increasing
  std::vector<double> sinr_db;      // strictly increasing
  std::vector<double> cells;        // row-major, u_values.size() x sinr_db.size()

  [[nodiscard]] double cell(std::size_t row, std::size_t col) const {
    return cells[row * sinr_db.size() + col];
  }
};

enum class SimilarityMode { kSingleModal, kMultiModal };

/// Stand-in for the trained transceivers' similarity curves. Either the
/// analytic default or a loaded table; both are in [0,1] and nondecreasing in
/// u and SINR.
class SimilaritySurrogate {
 public:
  SimilaritySurrogate();
  explicit SimilaritySurrogate(AnalyticSimilarity params,
                               SimilarityMode mode = SimilarityMode::kSingleModal);
  explicit SimilaritySurrogate(SimilarityGrid grid,
                               SimilarityMode mode = SimilarityMode::kSingleModal);

  /// Single-stream similarity for symbol length u and linear SINR.
  [[nodiscard]] double evaluate(double u, double sinr) const;

  [[nodiscard]] bool is_table() const { return table_ != nullptr; }
  [[nodiscard]] SimilarityMode mode() const { return mode_; }
  [[nodiscard]] const AnalyticSimilarity& analytic() const { return analytic_; }
  [[nodiscard]] const SimilarityGrid* table() const { return table_.get(); }
  /// Number of table queries whose u fell outside the grid and was clamped.
  [[nodiscard]] std::uint64_t clamp_warnings() const { return clamp_warnings_->load(); }

 private:
  AnalyticSimilarity analytic_;
  std::shared_ptr<const SimilarityGrid> table_;
  SimilarityMode mode_ = SimilarityMode::kSingleModal;
  std::shared_ptr<std::atomic<std::uint64_t>> clamp_warnings_;
};

/// Parses the comma-separated grid format (header row of SINR dB breakpoints
/// after a label cell; each following row is u then the similarity cells).
/// Throws std::invalid_argument naming the offending row/column.
SimilaritySurrogate parse_similarity_table(const std::string& text);
SimilaritySurrogate load_similarity_table(const std::filesystem::path& path);

double similarity_sm(const SimilaritySurrogate& surrogate, double u_text, double sinr);
/// Geometric mean of the text and image single-stream similarities.
double similarity_mm(const SimilaritySurrogate& surrogate, double u_text, double u_image,
                     double sinr_text, double sinr_image);

struct SemanticConfig {
  double entropy_sm = 4.0;        // suts/word
  double entropy_mm_text = 4.0;   // suts/word
  double entropy_mm_image = 6.0;  // suts/word
  double bandwidth_hz = 180e3;
  int u_max_text = 30;
  int u_max_image = 30;
  // B_s is drawn per episode from [min, max]; equal bounds fix it.
  double payload_min_suts = 1000.0;
  double payload_max_suts = 6000.0;
  double delivery_window_s = 0.1;
  double logistic_scale = 1.0;    // alpha, per ksuts/s
  double objective_weight = 1.0;  // lambda
  double reward_weight_srs = 0.5;  // w1
  double reward_weight_qoe = 0.5;  // w2
};

/// Per-vehicle QoE preferences.
struct QoEProfile {
  double rate_weight = 0.5;         // omega in [0,1]
  double rate_target_ksuts = 60.0;  // phi_target
  double similarity_target = 0.85;  // xi_target
  double rate_slope = 0.1;          // gamma, per ksuts/s
  double similarity_slope = 55.0;   // delta
};

/// What one vehicle received in a slot.
struct ServiceLevel {
  double rate_suts_per_s = 0.0;
  double similarity = 0.0;
};

/// phi = W * H / u. Throws std::invalid_argument when u < 1 or W <= 0 or H < 0.
double semantic_rate(double bandwidth_hz, double entropy_suts_per_word, double u);

/// 1 / (1 + exp(slope * (target - x)))
double score_sigmoid(double x, double target, double slope);

/// Sum over vehicles of omega*Score_R(phi) + (1-omega)*Score_A(xi); rates are
/// scored in ksuts/s. Throws std::invalid_argument on mismatched sizes.
double qoe_platoon(std::span<const QoEProfile> profiles, std::span<const ServiceLevel> service);

/// Logistic relaxation of the delivery requirement, rate vs B_s / dT.
double srs_logistic(double delivered_rate, double payload, double window_s, double alpha);

/// Hard delivery indicator: 1 iff delivered >= payload.
int srs_hard(double cumulative_delivered, double payload);

/// W * H / u with u in bits/word (no-semantics baseline).
double qoe_traditional(double bandwidth_hz, double entropy, double u_bits_per_word);

}  // namespace samra::semantics
