#pragma once

// Dense multilayer perceptrons with hand-written reverse mode and Adam.

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gancls/dist.hpp"

namespace gancls {

enum class OutputActivation { Identity, Logistic };

inline constexpr double kLeakySlope = 0.2;

/// Activation record of one forward pass.
struct Tape {
  std::vector<std::size_t> sizes;
  /// Input of every layer (activations[0] is the network input).
  std::vector<std::vector<double>> activations;
  /// Pre-activations of every layer.
  std::vector<std::vector<double>> pre;
};

struct ForwardResult {
  std::vector<double> output;
  Tape tape;
};

struct BackwardResult {
  std::vector<double> parameter_grads;
  std::vector<double> input_grad;
};

/// Fully connected network; hidden layers use a leaky rectifier with slope 0.2.
/// Parameters live in one flat buffer: for each layer, its out x in weight
/// matrix (row-major) followed by its bias.
class Mlp {
 public:
  Mlp(std::vector<std::size_t> sizes, OutputActivation output);
  /// Glorot-uniform weights, zero biases.
  Mlp(std::vector<std::size_t> sizes, OutputActivation output, Rng& rng);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  OutputActivation output_activation() const { return output_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  ForwardResult forward(std::span<const double> input) const;
  /// Forward pass without the tape.
  std::vector<double> predict(std::span<const double> input) const;
  /// Reverse mode for a scalar loss whose gradient w.r.t. the output is
  /// `output_grad`. With `wrt_logits`, the gradient is taken to be w.r.t. the
  /// final pre-activation instead (skips the output nonlinearity).
  BackwardResult backward(const Tape& tape, std::span<const double> output_grad,
                          bool wrt_logits = false) const;
  /// Same, accumulating parameter gradients into `grads`; returns the input
  /// gradient.
  std::vector<double> backward_into(const Tape& tape, std::span<const double> output_grad,
                                    std::span<double> grads, bool wrt_logits = false) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  std::vector<std::size_t> sizes_;
  OutputActivation output_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

double logistic(double s);

/// Checkpoint layout:
///   {"format": "gancls-mlp/1", "output": "identity" | "logistic",
///    "sizes": [...], "layers": [{"in", "out", "weight": [out*in row-major], "bias": [out]}]}
nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& doc);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step = 0;
  double learning_rate = 0.0002;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t parameter_count, double learning_rate = 0.0002)
      : first_moment(parameter_count, 0.0),
        second_moment(parameter_count, 0.0),
        learning_rate(learning_rate) {}
};

/// Bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

struct LatentSpec {
  std::size_t dimension = 4;

  std::vector<double> sample(Rng& rng) const;
};

}  // namespace gancls
