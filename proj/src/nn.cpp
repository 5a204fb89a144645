#include "gancls/nn.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

namespace gancls {

double logistic(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

Mlp::Mlp(std::vector<std::size_t> sizes, OutputActivation output)
    : sizes_(std::move(sizes)), output_(output) {
  if (sizes_.size() < 2) throw ValidationError("mlp needs at least an input and an output size");
  for (std::size_t s : sizes_)
    if (s == 0) throw ValidationError("mlp layer sizes must be positive");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp::Mlp(std::vector<std::size_t> sizes, OutputActivation output, Rng& rng)
    : Mlp(std::move(sizes), output) {
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const double fan = static_cast<double>(sizes_[l] + sizes_[l + 1]);
    std::uniform_real_distribution<double> init(-std::sqrt(6.0 / fan), std::sqrt(6.0 / fan));
    for (double& w : weights(l)) w = init(rng);
  }
}

std::span<double> Mlp::weights(std::size_t layer) {
  return std::span<double>(params_).subspan(weight_offset(layer), sizes_[layer] * sizes_[layer + 1]);
}
std::span<const double> Mlp::weights(std::size_t layer) const {
  return std::span<const double>(params_).subspan(weight_offset(layer),
                                                  sizes_[layer] * sizes_[layer + 1]);
}
std::span<double> Mlp::bias(std::size_t layer) {
  return std::span<double>(params_).subspan(bias_offset(layer), sizes_[layer + 1]);
}
std::span<const double> Mlp::bias(std::size_t layer) const {
  return std::span<const double>(params_).subspan(bias_offset(layer), sizes_[layer + 1]);
}

ForwardResult Mlp::forward(std::span<const double> input) const {
  if (input.size() != input_size()) {
    throw ValidationError("mlp input has " + std::to_string(input.size()) + " entries, expected " +
                          std::to_string(input_size()));
  }
  ForwardResult out;
  out.tape.sizes = sizes_;
  out.tape.activations.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t n = sizes_[l + 1];
    const auto w = weights(l);
    const auto b = bias(l);
    const auto& a = out.tape.activations.back();
    std::vector<double> z(n);
    for (std::size_t o = 0; o < n; ++o) {
      double s = b[o];
      const double* row = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
      z[o] = s;
    }
    std::vector<double> act(n);
    const bool last = l + 1 == layer_count();
    for (std::size_t o = 0; o < n; ++o) {
      if (!last) {
        act[o] = z[o] > 0.0 ? z[o] : kLeakySlope * z[o];
      } else {
        act[o] = output_ == OutputActivation::Logistic ? logistic(z[o]) : z[o];
      }
    }
    out.tape.pre.push_back(std::move(z));
    if (last) {
      out.output = std::move(act);
    } else {
      out.tape.activations.push_back(std::move(act));
    }
  }
  return out;
}

std::vector<double> Mlp::predict(std::span<const double> input) const {
  return forward(input).output;
}

std::vector<double> Mlp::backward_into(const Tape& tape, std::span<const double> output_grad,
                                       std::span<double> grads, bool wrt_logits) const {
  if (tape.sizes != sizes_ || tape.activations.size() != layer_count() ||
      tape.pre.size() != layer_count()) {
    throw ValidationError("tape was not produced by this network");
  }
  if (output_grad.size() != output_size()) throw ValidationError("output gradient size mismatch");
  if (grads.size() != params_.size()) throw ValidationError("gradient buffer size mismatch");

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t l = layer_count(); l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t n = sizes_[l + 1];
    const auto& z = tape.pre[l];
    const bool last = l + 1 == layer_count();
    for (std::size_t o = 0; o < n; ++o) {
      if (!last) {
        delta[o] *= z[o] > 0.0 ? 1.0 : kLeakySlope;
      } else if (output_ == OutputActivation::Logistic && !wrt_logits) {
        const double s = logistic(z[o]);
        delta[o] *= s * (1.0 - s);
      }
    }
    const auto& a = tape.activations[l];
    const auto w = weights(l);
    double* gw = grads.data() + weight_offset(l);
    double* gb = grads.data() + bias_offset(l);
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < n; ++o) {
      const double d = delta[o];
      gb[o] += d;
      double* grow = gw + o * in;
      const double* wrow = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        grow[i] += d * a[i];
        prev[i] += d * wrow[i];
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

BackwardResult Mlp::backward(const Tape& tape, std::span<const double> output_grad,
                             bool wrt_logits) const {
  BackwardResult out;
  out.parameter_grads.assign(params_.size(), 0.0);
  out.input_grad = backward_into(tape, output_grad, out.parameter_grads, wrt_logits);
  return out;
}

nlohmann::json to_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto w = net.weights(l);
    const auto b = net.bias(l);
    layers.push_back({{"in", net.sizes()[l]},
                      {"out", net.sizes()[l + 1]},
                      {"weight", std::vector<double>(w.begin(), w.end())},
                      {"bias", std::vector<double>(b.begin(), b.end())}});
  }
  return {{"format", "gancls-mlp/1"},
          {"output", net.output_activation() == OutputActivation::Logistic ? "logistic" : "identity"},
          {"sizes", net.sizes()},
          {"layers", std::move(layers)}};
}

Mlp mlp_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "gancls-mlp/1") {
      throw ValidationError("unsupported checkpoint format");
    }
    const auto output = doc.at("output").get<std::string>();
    if (output != "identity" && output != "logistic") throw ValidationError("unknown output activation");
    Mlp net(doc.at("sizes").get<std::vector<std::size_t>>(),
            output == "logistic" ? OutputActivation::Logistic : OutputActivation::Identity);
    const auto& layers = doc.at("layers");
    if (layers.size() != net.layer_count()) throw ValidationError("checkpoint layer count mismatch");
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      const auto w = layers[l].at("weight").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      auto nw = net.weights(l);
      auto nb = net.bias(l);
      if (w.size() != nw.size() || b.size() != nb.size()) {
        throw ValidationError("checkpoint tensor shape mismatch in layer " + std::to_string(l));
      }
      std::copy(w.begin(), w.end(), nw.begin());
      std::copy(b.begin(), b.end(), nb.begin());
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw ValidationError("adam_step: shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
    state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.first_moment[i] / c1;
    const double v_hat = state.second_moment[i] / c2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

std::vector<double> LatentSpec::sample(Rng& rng) const {
  if (dimension < 1) throw ValidationError("latent dimension must be at least 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(dimension);
  for (double& v : z) v = normal(rng);
  return z;
}

}  // namespace gancls
