#pragma once

// Minibatch training of conditional generator / discriminator pairs under the
// matching-aware objective and its corrected form.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gancls/dist.hpp"
#include "gancls/nn.hpp"

namespace gancls {

enum class Algorithm { GanCls, ModifiedGanCls };

std::string_view to_string(Algorithm algorithm);
Algorithm algorithm_from_string(std::string_view name);

/// Raised when training produces a non-finite loss.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Generator-side term on interpolated conditions alpha*h1 + (1-alpha)*h2.
struct GanIntSettings {
  bool enabled = false;
  double alpha = 0.5;
  double weight = 0.5;
};

struct TrainConfig {
  Algorithm algorithm = Algorithm::ModifiedGanCls;
  std::size_t batch_size = 64;
  double learning_rate = 0.0002;
  std::size_t iterations = 1;
  std::uint64_t seed = 0;
  LatentSpec latent;
  GanIntSettings gan_int;
  std::vector<std::size_t> g_hidden{16, 16};
  std::vector<std::size_t> d_hidden{16, 16};
  /// Snapshot period for the per-class TV columns; 0 snapshots only the final
  /// iteration.
  std::size_t eval_every = 0;
  std::size_t eval_samples = 20000;
  Pairing pairing = Pairing::PerTriple;

  void validate() const;
};

/// Reads the run-config document. `N` and `algorithm` are required.
TrainConfig train_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const TrainConfig& cfg);

struct IterationRecord {
  std::size_t iteration = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  std::optional<std::vector<double>> tv;
};

struct TrainHistory {
  std::size_t conditions = 0;
  std::vector<IterationRecord> records;

  /// Header: iter,L_D,L_G,tv_class_0,...; TV cells are empty between snapshots.
  void write_csv(std::ostream& os) const;
};

struct TrainResult {
  Mlp generator;
  Mlp discriminator;
  TrainHistory history;
};

/// Loss terms are computed on clamped discriminator outputs.
double discriminator_loss(Algorithm algorithm, std::span<const double> d_matched,
                          std::span<const double> d_generated, std::span<const double> d_mismatched);
double discriminator_loss(Algorithm algorithm, const Mlp& discriminator,
                          std::span<const MinibatchTriple> batch, std::span<const double> generated,
                          std::size_t conditions);

/// (1/m) sum 1/2 log(1 - D(x~, h)), plus weight * (1/m) sum log(1 - D(G(z, h^), h^))
/// over interpolated conditions when GAN-INT is enabled.
double generator_loss(std::span<const double> d_generated, const GanIntSettings& gan_int,
                      std::span<const double> d_interpolated);

struct DiscriminatorGradient {
  double loss = 0.0;
  std::vector<double> grads;
  /// D on the mismatched pairs of the batch.
  std::vector<double> d_mismatched;
};

/// L_D and its gradient with respect to the discriminator parameters. The
/// gradient is taken through the logits, ignoring the output clamp.
DiscriminatorGradient discriminator_loss_gradient(Algorithm algorithm, const Mlp& discriminator,
                                                  std::span<const MinibatchTriple> batch,
                                                  std::span<const double> generated, std::size_t conditions);

struct GeneratorGradient {
  double loss = 0.0;
  std::vector<double> grads;
};

/// L_G and its gradient with respect to the generator parameters, with
/// generator inputs [latents[i], one_hot(batch[i].condition)]. The GAN-INT
/// term interpolates each condition h with partner(h) under the same latent.
GeneratorGradient generator_loss_gradient(const Mlp& generator, const Mlp& discriminator,
                                          std::span<const MinibatchTriple> batch,
                                          std::span<const std::vector<double>> latents, std::size_t conditions,
                                          const GanIntSettings& gan_int, const MismatchRule& partner);

std::vector<double> concat(std::span<const double> a, std::span<const double> b);
std::vector<double> interpolate_condition(std::size_t h1, std::size_t h2, double alpha,
                                          std::size_t conditions);

/// Builds G: [z, h] -> x and D: [x, h] -> (0, 1) from the config sizes.
Mlp make_generator(const TrainConfig& cfg, std::size_t conditions, Rng& rng);
Mlp make_discriminator(const TrainConfig& cfg, std::size_t conditions, Rng& rng);

double generate(const Mlp& generator, std::span<const double> z, std::span<const double> condition);
double discriminate(const Mlp& discriminator, double x, std::span<const double> condition);

/// Stream used for the evaluation snapshot taken after `iteration`; kept apart
/// from the training stream so snapshots never perturb training.
Rng evaluation_rng(std::uint64_t seed, std::size_t iteration);

/// Runs cfg.iterations alternating discriminator / generator Adam steps.
TrainResult train(const SyntheticDataset& ds, const TrainConfig& cfg);

/// Trains only the discriminator against a frozen generator, with the same
/// loss and optimizer as train(). Returns the mean D over mismatched pairs
/// across the final min(100, steps) minibatches.
double fit_discriminator(const SyntheticDataset& ds, const TrainConfig& cfg, const Mlp& generator,
                         Mlp& discriminator, std::size_t steps);

}  // namespace gancls
