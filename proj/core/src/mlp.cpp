#include "samra/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace samra::marl {

namespace {

Matrix activate(Matrix z, Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return z;
    case Activation::kRelu:
      return z.cwiseMax(0.0);
    case Activation::kTanh:
      return z.array().tanh().matrix();
  }
  return z;
}

// Derivative expressed through the activation output.
Matrix activation_derivative(const Matrix& a, Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return Matrix::Ones(a.rows(), a.cols());
    case Activation::kRelu:
      return (a.array() > 0.0).cast<double>().matrix();
    case Activation::kTanh:
      return (1.0 - a.array().square()).matrix();
  }
  return Matrix::Ones(a.rows(), a.cols());
}

void check_shapes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("Mlp: layer sizes must be positive");
  }
}

}  // namespace

Vector MlpGradients::flat() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  Vector out(static_cast<Eigen::Index>(n));
  Eigen::Index pos = 0;
  for (const auto& l : layers) {
    out.segment(pos, l.weight.size()) = l.weight.reshaped();
    pos += l.weight.size();
    out.segment(pos, l.bias.size()) = l.bias;
    pos += l.bias.size();
  }
  return out;
}

Mlp::Mlp(std::vector<int> sizes, Activation hidden, Activation output)
    : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
  check_shapes(sizes_);
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    layers_.push_back(DenseLayer{Matrix::Zero(sizes_[i + 1], sizes_[i]), Vector::Zero(sizes_[i + 1])});
  }
}

Mlp::Mlp(std::vector<int> sizes, Activation hidden, Activation output, Rng& rng)
    : Mlp(std::move(sizes), hidden, output) {
  for (auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        layer.weight(r, c) = rng.uniform(-bound, bound);
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = rng.uniform(-bound, bound);
  }
}

void Mlp::check_input(const Matrix& input) const {
  if (input.rows() != input_size()) {
    throw std::invalid_argument("Mlp: input has " + std::to_string(input.rows()) +
                                " rows, expected " + std::to_string(input_size()));
  }
}

Matrix Mlp::forward(const Matrix& input) const {
  check_input(input);
  Matrix x = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = layers_[l].weight * x;
    z.colwise() += layers_[l].bias;
    x = activate(std::move(z), l + 1 == layers_.size() ? output_ : hidden_);
  }
  return x;
}

Vector Mlp::forward(const Vector& input) const {
  const Matrix out = forward(Matrix(input));
  return out.col(0);
}

Matrix Mlp::forward(const Matrix& input, Trace& trace) const {
  check_input(input);
  trace.inputs.clear();
  trace.activations.clear();
  Matrix x = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    trace.inputs.push_back(x);
    Matrix z = layers_[l].weight * x;
    z.colwise() += layers_[l].bias;
    x = activate(std::move(z), l + 1 == layers_.size() ? output_ : hidden_);
    trace.activations.push_back(x);
  }
  return x;
}

MlpGradients Mlp::backward(const Trace& trace, const Matrix& upstream) const {
  if (trace.activations.size() != layers_.size()) {
    throw std::invalid_argument("Mlp::backward: trace does not match network depth");
  }
  const Matrix& out = trace.activations.back();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw std::invalid_argument("Mlp::backward: upstream shape mismatch");
  }
  MlpGradients g;
  g.layers.resize(layers_.size());
  Matrix delta = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Activation act = i + 1 == layers_.size() ? output_ : hidden_;
    const Matrix dz = delta.cwiseProduct(activation_derivative(trace.activations[i], act));
    g.layers[i].weight = dz * trace.inputs[i].transpose();
    g.layers[i].bias = dz.rowwise().sum();
    delta = layers_[i].weight.transpose() * dz;
  }
  g.input = std::move(delta);
  return g;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Vector Mlp::flat_parameters() const {
  Vector out(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  for (const auto& l : layers_) {
    out.segment(pos, l.weight.size()) = l.weight.reshaped();
    pos += l.weight.size();
    out.segment(pos, l.bias.size()) = l.bias;
    pos += l.bias.size();
  }
  return out;
}

void Mlp::set_flat_parameters(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw std::invalid_argument("Mlp::set_flat_parameters: size mismatch");
  }
  Eigen::Index pos = 0;
  for (auto& l : layers_) {
    l.weight.reshaped() = flat.segment(pos, l.weight.size());
    pos += l.weight.size();
    l.bias = flat.segment(pos, l.bias.size());
    pos += l.bias.size();
  }
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void Mlp::soft_update_from(const Mlp& main, double tau) { soft_update(*this, main, tau); }

void soft_update(Mlp& target, const Mlp& main, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau must be in (0, 1]");
  if (target.sizes() != main.sizes()) throw std::invalid_argument("soft_update: shape mismatch");
  auto& t = target.layers();
  const auto& m = main.layers();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (tau == 1.0) {
      t[i] = m[i];
      continue;
    }
    // Incremental form leaves the target bit-identical when it already equals main.
    t[i].weight += tau * (m[i].weight - t[i].weight);
    t[i].bias += tau * (m[i].bias - t[i].bias);
  }
}

Adam::Adam(const Mlp& net, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  for (const auto& l : net.layers()) {
    m_.push_back(DenseLayer{Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    v_.push_back(m_.back());
  }
}

void Adam::step(Mlp& net, const MlpGradients& grads) {
  auto& layers = net.layers();
  if (grads.layers.size() != layers.size() || m_.size() != layers.size()) {
    throw std::invalid_argument("Adam::step: gradient/network mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].weight, m_[i].weight, v_[i].weight, grads.layers[i].weight);
    update(layers[i].bias, m_[i].bias, v_[i].bias, grads.layers[i].bias);
  }
}

}  // namespace samra::marl
