#pragma once

// Empirical measurement: outcome histograms, TV / KS metrics, pushforward
// densities of discriminator outputs, and the paired mismatch experiment.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "gancls/dist.hpp"
#include "gancls/nn.hpp"
#include "gancls/objective.hpp"
#include "gancls/train.hpp"

namespace gancls {

/// Counts are real-valued so the same type carries exact pmf masses.
struct EmpiricalHistogram {
  std::vector<double> edges;
  std::vector<double> counts;
  double total = 0.0;

  std::size_t bins() const { return counts.size(); }
  std::vector<double> normalized() const;
};

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins);

/// Samples outside [edges.front(), edges.back()] land in the end bins.
EmpiricalHistogram histogram(std::span<const double> samples, std::span<const double> edges);
EmpiricalHistogram weighted_histogram(std::span<const double> values, std::span<const double> weights,
                                      std::span<const double> edges);

/// Half the L1 distance between the normalized inputs.
double tv_distance(std::span<const double> a, std::span<const double> b);
double tv_distance(const EmpiricalHistogram& a, const EmpiricalHistogram& b);
/// Largest gap between the cumulative sums of the normalized inputs.
double ks_statistic(std::span<const double> a, std::span<const double> b);

void write_histogram_csv(std::ostream& os, const EmpiricalHistogram& h);
nlohmann::json to_json(const EmpiricalHistogram& h);

std::vector<double> generated_samples(const Mlp& generator, std::size_t cls, std::size_t conditions,
                                      const LatentSpec& latent, std::size_t n, Rng& rng);

struct ClassMetrics {
  std::vector<double> tv;
  std::vector<double> ks;
};

/// Histograms n generator samples per class on the dataset bins and compares
/// each with the discretized data conditional.
ClassMetrics per_class_metrics(const Mlp& generator, const SyntheticDataset& ds, const JointPMF& data_pmf,
                               const LatentSpec& latent, std::size_t n, Rng& rng);
std::vector<double> per_class_tv(const Mlp& generator, const SyntheticDataset& ds, const JointPMF& data_pmf,
                                 const LatentSpec& latent, std::size_t n, Rng& rng);

/// Histograms of D on matched, mismatched and generated pairs (20 bins on [0, 1]).
struct DOutputDensities {
  EmpiricalHistogram matched;
  EmpiricalHistogram mismatched;
  EmpiricalHistogram generated;
};

inline constexpr std::size_t kDensityBins = 20;

DOutputDensities d_output_densities(const Mlp& discriminator, const SyntheticDataset& ds, const Mlp& generator,
                                    const LatentSpec& latent, std::size_t n, std::uint64_t seed);

/// Exact pushforward of a discriminator table under p_d, p_mis and p_g on the
/// discrete grid, using the same bins.
DOutputDensities pushforward_densities(const DiscriminatorTable& d, const JointPMF& data,
                                       const JointPMF& mismatched, const GeneratorPMF& generator);

struct AlgorithmResult {
  Algorithm algorithm;
  std::vector<double> tv;
  std::vector<double> ks;
  DOutputDensities densities;
  TrainHistory history;
};

struct ExperimentReport {
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<AlgorithmResult> results;

  const AlgorithmResult& result(Algorithm algorithm) const;
};

/// Metrics of a finished run, measured with the evaluation stream of its final
/// iteration.
AlgorithmResult evaluate_run(const SyntheticDataset& ds, const TrainConfig& cfg, TrainResult run);

/// Trains GanCls and ModifiedGanCls on identical data and seed (sequentially)
/// with mismatched outcomes drawn from `override_sampler` when given.
ExperimentReport mismatch_experiment(const SyntheticDataset& base,
                                     const std::optional<std::vector<GaussianMixture>>& override_sampler,
                                     const TrainConfig& cfg);

nlohmann::json to_json(const ExperimentReport& report);

}  // namespace gancls
