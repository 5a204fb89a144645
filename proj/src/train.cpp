#include "gancls/train.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gancls/eval.hpp"
#include "gancls/objective.hpp"

namespace gancls {

std::string_view to_string(Algorithm algorithm) {
  return algorithm == Algorithm::GanCls ? "gancls" : "modified";
}

Algorithm algorithm_from_string(std::string_view name) {
  if (name == "gancls" || name == "GanCls") return Algorithm::GanCls;
  if (name == "modified" || name == "ModifiedGanCls") return Algorithm::ModifiedGanCls;
  throw ConfigError("unknown algorithm: " + std::string(name));
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("m must be at least 1");
  if (iterations < 1) throw ConfigError("N must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("epsilon must be positive");
  if (latent.dimension < 1) throw ConfigError("latent_dim must be at least 1");
  if (!(gan_int.alpha >= 0.0 && gan_int.alpha <= 1.0)) throw ConfigError("gan_int.alpha must lie in [0, 1]");
  if (!std::isfinite(gan_int.weight)) throw ConfigError("gan_int.weight must be finite");
  if (eval_samples < 1) throw ConfigError("eval_samples must be at least 1");
  for (auto s : g_hidden)
    if (s == 0) throw ConfigError("g_hidden sizes must be positive");
  for (auto s : d_hidden)
    if (s == 0) throw ConfigError("d_hidden sizes must be positive");
}

namespace {

const nlohmann::json& require(const nlohmann::json& doc, const char* field) {
  if (!doc.is_object() || !doc.contains(field)) throw ConfigError(std::string("missing field: ") + field);
  return doc.at(field);
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::json& doc) {
  TrainConfig cfg;
  try {
    cfg.algorithm = algorithm_from_string(require(doc, "algorithm").get<std::string>());
    cfg.iterations = require(doc, "N").get<std::size_t>();
    if (doc.contains("m")) cfg.batch_size = doc.at("m").get<std::size_t>();
    if (doc.contains("epsilon")) cfg.learning_rate = doc.at("epsilon").get<double>();
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("latent_dim")) cfg.latent.dimension = doc.at("latent_dim").get<std::size_t>();
    if (doc.contains("gan_int")) {
      const auto& gi = doc.at("gan_int");
      if (gi.contains("enabled")) cfg.gan_int.enabled = gi.at("enabled").get<bool>();
      if (gi.contains("alpha")) cfg.gan_int.alpha = gi.at("alpha").get<double>();
      if (gi.contains("weight")) cfg.gan_int.weight = gi.at("weight").get<double>();
    }
    if (doc.contains("g_hidden")) cfg.g_hidden = doc.at("g_hidden").get<std::vector<std::size_t>>();
    if (doc.contains("d_hidden")) cfg.d_hidden = doc.at("d_hidden").get<std::vector<std::size_t>>();
    if (doc.contains("eval_every")) cfg.eval_every = doc.at("eval_every").get<std::size_t>();
    if (doc.contains("eval_samples")) cfg.eval_samples = doc.at("eval_samples").get<std::size_t>();
    if (doc.contains("pairing")) {
      const auto p = doc.at("pairing").get<std::string>();
      if (p == "per_triple") {
        cfg.pairing = Pairing::PerTriple;
      } else if (p == "shared_pair") {
        cfg.pairing = Pairing::SharedPair;
      } else {
        throw ConfigError("unknown pairing: " + p);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"algorithm", to_string(cfg.algorithm)},
          {"m", cfg.batch_size},
          {"epsilon", cfg.learning_rate},
          {"N", cfg.iterations},
          {"seed", cfg.seed},
          {"latent_dim", cfg.latent.dimension},
          {"gan_int", {{"enabled", cfg.gan_int.enabled}, {"alpha", cfg.gan_int.alpha}, {"weight", cfg.gan_int.weight}}},
          {"g_hidden", cfg.g_hidden},
          {"d_hidden", cfg.d_hidden},
          {"eval_every", cfg.eval_every},
          {"eval_samples", cfg.eval_samples},
          {"pairing", cfg.pairing == Pairing::PerTriple ? "per_triple" : "shared_pair"}};
}

void TrainHistory::write_csv(std::ostream& os) const {
  os << "iter,L_D,L_G";
  for (std::size_t h = 0; h < conditions; ++h) os << ",tv_class_" << h;
  os << '\n';
  for (const auto& r : records) {
    os << fmt::format("{},{:.17g},{:.17g}", r.iteration, r.loss_d, r.loss_g);
    for (std::size_t h = 0; h < conditions; ++h) {
      os << ',';
      if (r.tv) os << fmt::format("{:.17g}", (*r.tv)[h]);
    }
    os << '\n';
  }
}

namespace {

double clamped_log(double d) { return std::log(std::clamp(d, kDiscriminatorClamp, 1.0 - kDiscriminatorClamp)); }
double clamped_log1m(double d) {
  return std::log1p(-std::clamp(d, kDiscriminatorClamp, 1.0 - kDiscriminatorClamp));
}

// Per-triple weights of L_D = -(1/m) sum [real log D(x,h) + fake log(1 - D(x~,h))
//   + mis_real log D(x^,h) + mis_fake log(1 - D(x^,h))].
struct LossWeights {
  double real;
  double fake;
  double mis_real;
  double mis_fake;
};

LossWeights loss_weights(Algorithm algorithm) {
  if (algorithm == Algorithm::ModifiedGanCls) return {0.5, 0.5, 0.5, 0.5};
  return {1.0, 0.5, 0.0, 0.5};
}

}  // namespace

double discriminator_loss(Algorithm algorithm, std::span<const double> d_matched,
                          std::span<const double> d_generated, std::span<const double> d_mismatched) {
  const std::size_t m = d_matched.size();
  if (m == 0 || d_generated.size() != m || d_mismatched.size() != m) {
    throw ValidationError("discriminator_loss: batch size mismatch");
  }
  const LossWeights w = loss_weights(algorithm);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    total += w.real * clamped_log(d_matched[i]) + w.fake * clamped_log1m(d_generated[i]);
    if (w.mis_real != 0.0) total += w.mis_real * clamped_log(d_mismatched[i]);
    total += w.mis_fake * clamped_log1m(d_mismatched[i]);
  }
  return -total / static_cast<double>(m);
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double discriminate(const Mlp& discriminator, double x, std::span<const double> condition) {
  const double xs[1] = {x};
  return discriminator.predict(concat(xs, condition))[0];
}

double generate(const Mlp& generator, std::span<const double> z, std::span<const double> condition) {
  return generator.predict(concat(z, condition))[0];
}

double discriminator_loss(Algorithm algorithm, const Mlp& discriminator,
                          std::span<const MinibatchTriple> batch, std::span<const double> generated,
                          std::size_t conditions) {
  if (generated.size() != batch.size()) throw ValidationError("discriminator_loss: batch size mismatch");
  std::vector<double> dm, dg, dx;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto h = one_hot(batch[i].condition, conditions);
    dm.push_back(discriminate(discriminator, batch[i].matched_outcome, h));
    dg.push_back(discriminate(discriminator, generated[i], h));
    dx.push_back(discriminate(discriminator, batch[i].mismatched_outcome, h));
  }
  return discriminator_loss(algorithm, dm, dg, dx);
}

double generator_loss(std::span<const double> d_generated, const GanIntSettings& gan_int,
                      std::span<const double> d_interpolated) {
  const std::size_t m = d_generated.size();
  if (m == 0) throw ValidationError("generator_loss: empty batch");
  double total = 0.0;
  for (double d : d_generated) total += 0.5 * clamped_log1m(d);
  double loss = total / static_cast<double>(m);
  if (gan_int.enabled) {
    if (d_interpolated.size() != m) throw ValidationError("generator_loss: interpolated batch size mismatch");
    double interp = 0.0;
    for (double d : d_interpolated) interp += clamped_log1m(d);
    loss += gan_int.weight * interp / static_cast<double>(m);
  }
  return loss;
}

std::vector<double> interpolate_condition(std::size_t h1, std::size_t h2, double alpha,
                                          std::size_t conditions) {
  std::vector<double> v(conditions, 0.0);
  v.at(h1) += alpha;
  v.at(h2) += 1.0 - alpha;
  return v;
}

Mlp make_generator(const TrainConfig& cfg, std::size_t conditions, Rng& rng) {
  std::vector<std::size_t> sizes{cfg.latent.dimension + conditions};
  sizes.insert(sizes.end(), cfg.g_hidden.begin(), cfg.g_hidden.end());
  sizes.push_back(1);
  return Mlp(std::move(sizes), OutputActivation::Identity, rng);
}

Mlp make_discriminator(const TrainConfig& cfg, std::size_t conditions, Rng& rng) {
  std::vector<std::size_t> sizes{1 + conditions};
  sizes.insert(sizes.end(), cfg.d_hidden.begin(), cfg.d_hidden.end());
  sizes.push_back(1);
  return Mlp(std::move(sizes), OutputActivation::Logistic, rng);
}

namespace {

struct Scored {
  Tape tape;
  double d;
};

Scored score(const Mlp& discriminator, double x, std::span<const double> condition) {
  const double xs[1] = {x};
  auto fwd = discriminator.forward(concat(xs, condition));
  return {std::move(fwd.tape), fwd.output[0]};
}

}  // namespace

DiscriminatorGradient discriminator_loss_gradient(Algorithm algorithm, const Mlp& discriminator,
                                                  std::span<const MinibatchTriple> batch,
                                                  std::span<const double> generated, std::size_t conditions) {
  if (batch.empty() || generated.size() != batch.size()) {
    throw ValidationError("discriminator_loss_gradient: batch size mismatch");
  }
  const LossWeights w = loss_weights(algorithm);
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  DiscriminatorGradient out{0.0, std::vector<double>(discriminator.parameter_count(), 0.0), {}};
  std::vector<double> dm, dg;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto h = one_hot(batch[i].condition, conditions);
    const Scored a = score(discriminator, batch[i].matched_outcome, h);
    const Scored b = score(discriminator, generated[i], h);
    const Scored c = score(discriminator, batch[i].mismatched_outcome, h);
    dm.push_back(a.d);
    dg.push_back(b.d);
    out.d_mismatched.push_back(c.d);
    // d/ds log(sigmoid(s)) = 1 - sigmoid(s); d/ds log(1 - sigmoid(s)) = -sigmoid(s).
    const double ga[1] = {-inv_m * w.real * (1.0 - a.d)};
    const double gb[1] = {inv_m * w.fake * b.d};
    const double gc[1] = {-inv_m * (w.mis_real * (1.0 - c.d) - w.mis_fake * c.d)};
    discriminator.backward_into(a.tape, ga, out.grads, true);
    discriminator.backward_into(b.tape, gb, out.grads, true);
    discriminator.backward_into(c.tape, gc, out.grads, true);
  }
  out.loss = discriminator_loss(algorithm, dm, dg, out.d_mismatched);
  return out;
}

GeneratorGradient generator_loss_gradient(const Mlp& generator, const Mlp& discriminator,
                                          std::span<const MinibatchTriple> batch,
                                          std::span<const std::vector<double>> latents, std::size_t conditions,
                                          const GanIntSettings& gan_int, const MismatchRule& partner) {
  const std::size_t m = batch.size();
  if (m == 0 || latents.size() != m) throw ValidationError("generator_loss_gradient: batch size mismatch");
  const double inv_m = 1.0 / static_cast<double>(m);
  GeneratorGradient out{0.0, std::vector<double>(generator.parameter_count(), 0.0)};
  std::vector<double> d_scratch(discriminator.parameter_count(), 0.0);
  std::vector<double> dg(m), di;

  auto accumulate = [&](std::span<const double> condition, std::size_t i, double weight) {
    auto fwd = generator.forward(concat(latents[i], condition));
    const Scored s = score(discriminator, fwd.output[0], condition);
    const double gs[1] = {-inv_m * weight * s.d};
    const auto dx = discriminator.backward_into(s.tape, gs, d_scratch, true);
    const double gx[1] = {dx[0]};
    generator.backward_into(fwd.tape, gx, out.grads);
    return s.d;
  };

  for (std::size_t i = 0; i < m; ++i) dg[i] = accumulate(one_hot(batch[i].condition, conditions), i, 0.5);
  if (gan_int.enabled) {
    di.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto hi =
          interpolate_condition(batch[i].condition, partner(batch[i].condition), gan_int.alpha, conditions);
      di[i] = accumulate(hi, i, gan_int.weight);
    }
  }
  out.loss = generator_loss(dg, gan_int, di);
  return out;
}

Rng evaluation_rng(std::uint64_t seed, std::size_t iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), 0x7e57U};
  return Rng(seq);
}

TrainResult train(const SyntheticDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  const std::size_t H = ds.condition_count();
  const std::size_t m = cfg.batch_size;

  Rng rng(cfg.seed);
  Mlp generator = make_generator(cfg, H, rng);
  Mlp discriminator = make_discriminator(cfg, H, rng);
  AdamState adam_g(generator.parameter_count(), cfg.learning_rate);
  AdamState adam_d(discriminator.parameter_count(), cfg.learning_rate);
  const JointPMF data_pmf = discretize(ds);

  TrainHistory history{H, {}};
  history.records.reserve(cfg.iterations);

  std::vector<double> generated(m);
  std::vector<std::vector<double>> latents(m);

  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    const auto batch = sample_minibatch(ds, m, rng, cfg.pairing);
    for (std::size_t i = 0; i < m; ++i) {
      latents[i] = cfg.latent.sample(rng);
      generated[i] = generate(generator, latents[i], one_hot(batch[i].condition, H));
    }

    const auto d_step = discriminator_loss_gradient(cfg.algorithm, discriminator, batch, generated, H);
    adam_step(discriminator.parameters(), d_step.grads, adam_d);
    const double loss_d = d_step.loss;

    // Generator step against the updated discriminator.
    const auto g_step =
        generator_loss_gradient(generator, discriminator, batch, latents, H, cfg.gan_int, ds.mismatch_rule);
    adam_step(generator.parameters(), g_step.grads, adam_g);
    const double loss_g = g_step.loss;

    if (!std::isfinite(loss_d) || !std::isfinite(loss_g)) {
      throw TrainingError(fmt::format("non-finite loss at iteration {} (L_D={}, L_G={})", it, loss_d, loss_g));
    }
    for (double p : generator.parameters())
      if (!std::isfinite(p)) throw TrainingError(fmt::format("non-finite generator parameter at iteration {}", it));
    for (double p : discriminator.parameters())
      if (!std::isfinite(p)) throw TrainingError(fmt::format("non-finite discriminator parameter at iteration {}", it));

    IterationRecord rec{it, loss_d, loss_g, std::nullopt};
    if (it == cfg.iterations || (cfg.eval_every > 0 && it % cfg.eval_every == 0)) {
      Rng eval_rng = evaluation_rng(cfg.seed, it);
      rec.tv = per_class_tv(generator, ds, data_pmf, cfg.latent, cfg.eval_samples, eval_rng);
    }
    history.records.push_back(std::move(rec));
  }
  return {std::move(generator), std::move(discriminator), std::move(history)};
}

double fit_discriminator(const SyntheticDataset& ds, const TrainConfig& cfg, const Mlp& generator,
                         Mlp& discriminator, std::size_t steps) {
  cfg.validate();
  ds.validate();
  const std::size_t H = ds.condition_count();
  Rng rng(cfg.seed);
  AdamState adam(discriminator.parameter_count(), cfg.learning_rate);
  const std::size_t tail = std::min<std::size_t>(100, steps);
  double tail_sum = 0.0;
  std::vector<double> generated(cfg.batch_size);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto batch = sample_minibatch(ds, cfg.batch_size, rng, cfg.pairing);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      generated[i] = generate(generator, cfg.latent.sample(rng), one_hot(batch[i].condition, H));
    }
    const auto step = discriminator_loss_gradient(cfg.algorithm, discriminator, batch, generated, H);
    adam_step(discriminator.parameters(), step.grads, adam);
    if (s + tail >= steps) {
      double mean = 0.0;
      for (double d : step.d_mismatched) mean += d;
      tail_sum += mean / static_cast<double>(step.d_mismatched.size());
    }
  }
  return tail == 0 ? 0.5 : tail_sum / static_cast<double>(tail);
}

}  // namespace gancls
