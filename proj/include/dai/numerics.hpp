#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dai/rng.hpp"

namespace dai {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { identity, relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Architecture of a fully connected network.
struct NetworkSpec {
  std::vector<int> layer_sizes;  // input, hidden..., output
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::identity;

  void validate() const;
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return layer_sizes.size() - 1; }
  std::size_t parameter_count() const;
  bool operator==(const NetworkSpec&) const = default;
};

/// Per-layer weight matrices (out x in) and bias vectors. Shared storage layout
/// for parameters, gradients and optimizer moments.
struct LayerBlocks {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static LayerBlocks zeros(const NetworkSpec& spec);
  bool congruent(const LayerBlocks& other) const;
  bool all_finite() const;
  /// Weights then bias of layer 0, then layer 1, ... (column-major weights).
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  std::size_t size() const;
  /// Largest |a - b| over all entries.
  double max_abs_diff(const LayerBlocks& other) const;
  bool operator==(const LayerBlocks& other) const;
};

struct NetworkParameters {
  NetworkSpec spec;
  LayerBlocks blocks;

  static NetworkParameters zeros(const NetworkSpec& spec);
  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  static NetworkParameters init_uniform(const NetworkSpec& spec, Rng& rng);

  Matrix& weight(std::size_t layer) { return blocks.weights[layer]; }
  Vector& bias(std::size_t layer) { return blocks.biases[layer]; }
  const Matrix& weight(std::size_t layer) const { return blocks.weights[layer]; }
  const Vector& bias(std::size_t layer) const { return blocks.biases[layer]; }
  bool operator==(const NetworkParameters& other) const {
    return spec == other.spec && blocks == other.blocks;
  }
};

/// d(loss)/d(parameter) for every layer, plus d(loss)/d(input) per sample.
struct GradientSet {
  LayerBlocks blocks;
  Matrix input;  // input_dim x batch
};

struct AdamState {
  LayerBlocks first_moment;
  LayerBlocks second_moment;
  long long step_count = 0;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const NetworkParameters& params, double learning_rate);
  bool operator==(const AdamState& other) const = default;
};

/// Post-activation outputs of every layer for one batch; column j is sample j.
struct ForwardTape {
  std::vector<Matrix> activations;  // [0] is the input, back() is the output
  const Matrix& output() const { return activations.back(); }
};

Vector forward(const NetworkParameters& params, const Vector& input);
Matrix forward_batch(const NetworkParameters& params, const Matrix& inputs);
ForwardTape forward_tape(const NetworkParameters& params, const Matrix& inputs);

/// Gradients of sum_j output_j . output_grad_j, parameter gradients summed over
/// the batch.
GradientSet backward(const NetworkParameters& params, const ForwardTape& tape,
                     const Matrix& output_grad);
GradientSet backward(const NetworkParameters& params, const Vector& input,
                     const Vector& output_grad);

/// Bias-corrected Adam step, in place.
void adam_step(NetworkParameters& params, const GradientSet& grads, AdamState& state);

/// target <- (1 - tau) * target + tau * live
void soft_update(NetworkParameters& target, const NetworkParameters& live, double tau);

}  // namespace dai
