#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "samra/rng.hpp"

namespace samra::marl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kIdentity, kRelu, kTanh };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Per-layer gradients plus the gradient with respect to the network input.
struct MlpGradients {
  std::vector<DenseLayer> layers;
  Matrix input;  // in x batch

  /// Flattened parameter gradient in layer order (weights column-major, then bias).
  [[nodiscard]] Vector flat() const;
};

/// Fully connected network. Batches are column-major: one sample per column.
class Mlp {
 public:
  Mlp() = default;
  /// Uniform fan-in initialisation: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(std::vector<int> sizes, Activation hidden, Activation output, Rng& rng);
  /// Zero-initialised network with the given shapes.
  Mlp(std::vector<int> sizes, Activation hidden, Activation output);

  struct Trace {
    std::vector<Matrix> inputs;       // input of each layer
    std::vector<Matrix> activations;  // post-activation output of each layer
  };

  [[nodiscard]] Matrix forward(const Matrix& input) const;
  [[nodiscard]] Matrix forward(const Matrix& input, Trace& trace) const;
  [[nodiscard]] Vector forward(const Vector& input) const;

  /// Reverse-mode gradients of sum(output .* upstream).
  [[nodiscard]] MlpGradients backward(const Trace& trace, const Matrix& upstream) const;

  [[nodiscard]] int input_size() const { return sizes_.front(); }
  [[nodiscard]] int output_size() const { return sizes_.back(); }
  [[nodiscard]] const std::vector<int>& sizes() const { return sizes_; }
  [[nodiscard]] Activation hidden_activation() const { return hidden_; }
  [[nodiscard]] Activation output_activation() const { return output_; }
  [[nodiscard]] std::vector<DenseLayer>& layers() { return layers_; }
  [[nodiscard]] const std::vector<DenseLayer>& layers() const { return layers_; }

  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] Vector flat_parameters() const;
  void set_flat_parameters(const Vector& flat);
  [[nodiscard]] bool all_finite() const;

  /// target <- tau * main + (1 - tau) * target.
  void soft_update_from(const Mlp& main, double tau);

 private:
  void check_input(const Matrix& input) const;

  std::vector<int> sizes_;
  Activation hidden_ = Activation::kRelu;
  Activation output_ = Activation::kIdentity;
  std::vector<DenseLayer> layers_;
};

/// Elementwise soft update; throws std::invalid_argument when tau is outside (0, 1]
/// or the shapes differ.
void soft_update(Mlp& target, const Mlp& main, double tau);

/// Adaptive moment estimation over one network's parameters.
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  /// Descends along `grads` (pass negated gradients to ascend).
  void step(Mlp& net, const MlpGradients& grads);

  [[nodiscard]] double learning_rate() const { return lr_; }
  [[nodiscard]] long steps() const { return t_; }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
};

}  // namespace samra::marl
