#include "dai/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "dai/error.hpp"

namespace dai {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ContractViolation("unknown activation '" + name + "'");
}

void NetworkSpec::validate() const {
  require(layer_sizes.size() >= 2, "network needs at least an input and an output layer");
  for (int n : layer_sizes) require(n >= 1, "layer sizes must be positive");
  require(hidden_activation != Activation::identity || layer_sizes.size() == 2,
          "hidden activation must be relu or tanh");
  require(output_activation != Activation::relu, "output activation must be identity or tanh");
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += static_cast<std::size_t>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
  return n;
}

LayerBlocks LayerBlocks::zeros(const NetworkSpec& spec) {
  spec.validate();
  LayerBlocks b;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    b.weights.push_back(Matrix::Zero(spec.layer_sizes[l + 1], spec.layer_sizes[l]));
    b.biases.push_back(Vector::Zero(spec.layer_sizes[l + 1]));
  }
  return b;
}

bool LayerBlocks::congruent(const LayerBlocks& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() ||
        weights[l].cols() != other.weights[l].cols() ||
        biases[l].size() != other.biases[l].size())
      return false;
  }
  return true;
}

bool LayerBlocks::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l)
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  return true;
}

std::size_t LayerBlocks::size() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

std::vector<double> LayerBlocks::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.insert(out.end(), weights[l].data(), weights[l].data() + weights[l].size());
    out.insert(out.end(), biases[l].data(), biases[l].data() + biases[l].size());
  }
  return out;
}

void LayerBlocks::assign(std::span<const double> flat) {
  require(flat.size() == size(), "flat parameter array has wrong length");
  std::size_t at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy_n(flat.data() + at, weights[l].size(), weights[l].data());
    at += weights[l].size();
    std::copy_n(flat.data() + at, biases[l].size(), biases[l].data());
    at += biases[l].size();
  }
}

double LayerBlocks::max_abs_diff(const LayerBlocks& other) const {
  require(congruent(other), "max_abs_diff: blocks are not shape-congruent");
  double m = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    m = std::max(m, (weights[l] - other.weights[l]).cwiseAbs().maxCoeff());
    m = std::max(m, (biases[l] - other.biases[l]).cwiseAbs().maxCoeff());
  }
  return m;
}

bool LayerBlocks::operator==(const LayerBlocks& other) const {
  if (!congruent(other)) return false;
  // Bitwise comparison; NaN never appears in valid parameters.
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!std::equal(weights[l].data(), weights[l].data() + weights[l].size(),
                    other.weights[l].data()))
      return false;
    if (!std::equal(biases[l].data(), biases[l].data() + biases[l].size(),
                    other.biases[l].data()))
      return false;
  }
  return true;
}

NetworkParameters NetworkParameters::zeros(const NetworkSpec& spec) {
  return {spec, LayerBlocks::zeros(spec)};
}

NetworkParameters NetworkParameters::init_uniform(const NetworkSpec& spec, Rng& rng) {
  NetworkParameters p = zeros(spec);
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.layer_sizes[l]));
    Matrix& w = p.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < p.bias(l).size(); ++i) p.bias(l)(i) = rng.uniform(-bound, bound);
  }
  return p;
}

AdamState AdamState::for_params(const NetworkParameters& params, double learning_rate) {
  require(learning_rate > 0.0, "learning rate must be positive");
  AdamState s;
  s.first_moment = LayerBlocks::zeros(params.spec);
  s.second_moment = LayerBlocks::zeros(params.spec);
  s.learning_rate = learning_rate;
  return s;
}

namespace {

void apply_activation(Matrix& z, Activation a) {
  switch (a) {
    case Activation::identity: break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
  }
}

// Multiplies `grad` in place by the activation derivative, expressed through
// the post-activation value.
void apply_activation_grad(Matrix& grad, const Matrix& post, Activation a) {
  switch (a) {
    case Activation::identity: break;
    case Activation::relu: grad = (post.array() > 0.0).select(grad, 0.0); break;
    case Activation::tanh: grad.array() *= 1.0 - post.array().square(); break;
  }
}

Activation layer_activation(const NetworkSpec& spec, std::size_t layer) {
  return layer + 1 == spec.layer_count() ? spec.output_activation : spec.hidden_activation;
}

void check_inputs(const NetworkParameters& params, const Matrix& inputs) {
  require(inputs.rows() == params.spec.input_dim(),
          "forward: input dimension " + std::to_string(inputs.rows()) + " does not match network input " +
              std::to_string(params.spec.input_dim()));
  require(inputs.allFinite(), "forward: non-finite input rejected");
}

}  // namespace

ForwardTape forward_tape(const NetworkParameters& params, const Matrix& inputs) {
  check_inputs(params, inputs);
  ForwardTape tape;
  tape.activations.reserve(params.spec.layer_count() + 1);
  tape.activations.push_back(inputs);
  for (std::size_t l = 0; l < params.spec.layer_count(); ++l) {
    Matrix z = params.weight(l) * tape.activations.back();
    z.colwise() += params.bias(l);
    apply_activation(z, layer_activation(params.spec, l));
    tape.activations.push_back(std::move(z));
  }
  return tape;
}

Matrix forward_batch(const NetworkParameters& params, const Matrix& inputs) {
  check_inputs(params, inputs);
  Matrix a = inputs;
  for (std::size_t l = 0; l < params.spec.layer_count(); ++l) {
    Matrix z = params.weight(l) * a;
    z.colwise() += params.bias(l);
    apply_activation(z, layer_activation(params.spec, l));
    a = std::move(z);
  }
  return a;
}

Vector forward(const NetworkParameters& params, const Vector& input) {
  return forward_batch(params, input);
}

GradientSet backward(const NetworkParameters& params, const ForwardTape& tape,
                     const Matrix& output_grad) {
  const auto layers = params.spec.layer_count();
  require(tape.activations.size() == layers + 1, "backward: tape does not match network depth");
  require(output_grad.rows() == params.spec.output_dim() &&
              output_grad.cols() == tape.output().cols(),
          "backward: output gradient shape mismatch");
  GradientSet g;
  g.blocks.weights.resize(layers);
  g.blocks.biases.resize(layers);
  Matrix delta = output_grad;
  for (std::size_t l = layers; l-- > 0;) {
    apply_activation_grad(delta, tape.activations[l + 1], layer_activation(params.spec, l));
    g.blocks.weights[l].noalias() = delta * tape.activations[l].transpose();
    g.blocks.biases[l] = delta.rowwise().sum();
    Matrix upstream = params.weight(l).transpose() * delta;
    delta = std::move(upstream);
  }
  g.input = std::move(delta);
  return g;
}

GradientSet backward(const NetworkParameters& params, const Vector& input,
                     const Vector& output_grad) {
  require(output_grad.size() == params.spec.output_dim(),
          "backward: output gradient length does not match network output");
  return backward(params, forward_tape(params, input), output_grad);
}

void adam_step(NetworkParameters& params, const GradientSet& grads, AdamState& state) {
  require(params.blocks.congruent(grads.blocks), "adam_step: gradients are not shape-congruent");
  require(params.blocks.congruent(state.first_moment) &&
              params.blocks.congruent(state.second_moment),
          "adam_step: optimizer state is not shape-congruent");
  for (std::size_t l = 0; l < grads.blocks.weights.size(); ++l) {
    if (!grads.blocks.weights[l].allFinite() || !grads.blocks.biases[l].allFinite())
      throw NonFiniteError("adam_step: non-finite gradient in layer " + std::to_string(l));
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double lr = state.learning_rate;
  const double eps = state.epsilon;

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m.array() = b1 * m.array() + (1.0 - b1) * g.array();
    v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < grads.blocks.weights.size(); ++l) {
    update(params.weight(l), grads.blocks.weights[l], state.first_moment.weights[l],
           state.second_moment.weights[l]);
    update(params.bias(l), grads.blocks.biases[l], state.first_moment.biases[l],
           state.second_moment.biases[l]);
  }
}

void soft_update(NetworkParameters& target, const NetworkParameters& live, double tau) {
  require(target.blocks.congruent(live.blocks), "soft_update: networks are not shape-congruent");
  require(tau > 0.0 && tau <= 1.0, "soft_update: tau must lie in (0, 1]");
  for (std::size_t l = 0; l < target.blocks.weights.size(); ++l) {
    target.weight(l) += tau * (live.weight(l) - target.weight(l));
    target.bias(l) += tau * (live.bias(l) - target.bias(l));
  }
}

}  // namespace dai
