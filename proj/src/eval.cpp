#include "gancls/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace gancls {

std::vector<double> EmpiricalHistogram::normalized() const {
  std::vector<double> out(counts);
  if (total > 0.0)
    for (double& v : out) v /= total;
  return out;
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
  if (bins < 1 || !(lo < hi)) throw ValidationError("uniform_edges needs bins >= 1 and lo < hi");
  std::vector<double> edges(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + width * static_cast<double>(i);
  edges.back() = hi;
  return edges;
}

namespace {

void check_edges(std::span<const double> edges) {
  if (edges.size() < 2) throw ValidationError("histogram needs at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw ValidationError("histogram edges must be strictly increasing");
}

std::size_t bin_of(double v, std::span<const double> edges) {
  const std::size_t bins = edges.size() - 1;
  if (!(v >= edges[1])) return 0;  // also catches NaN
  if (v >= edges[bins - 1]) return bins - 1;
  // First edge strictly greater than v closes the bin.
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

}  // namespace

EmpiricalHistogram histogram(std::span<const double> samples, std::span<const double> edges) {
  if (samples.empty()) throw ValidationError("histogram needs at least one sample");
  check_edges(edges);
  EmpiricalHistogram h{{edges.begin(), edges.end()}, std::vector<double>(edges.size() - 1, 0.0), 0.0};
  for (double v : samples) h.counts[bin_of(v, edges)] += 1.0;
  h.total = static_cast<double>(samples.size());
  return h;
}

EmpiricalHistogram weighted_histogram(std::span<const double> values, std::span<const double> weights,
                                      std::span<const double> edges) {
  if (values.size() != weights.size()) throw ValidationError("weighted_histogram: length mismatch");
  check_edges(edges);
  EmpiricalHistogram h{{edges.begin(), edges.end()}, std::vector<double>(edges.size() - 1, 0.0), 0.0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (weights[i] < 0.0) throw ValidationError("weighted_histogram: negative weight");
    h.counts[bin_of(values[i], edges)] += weights[i];
    h.total += weights[i];
  }
  return h;
}

namespace {

std::vector<double> normalize(std::span<const double> v) {
  double total = 0.0;
  for (double x : v) {
    if (x < 0.0) throw ValidationError("distribution entries must be nonnegative");
    total += x;
  }
  if (!(total > 0.0)) throw ValidationError("distribution has no mass");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= total;
  return out;
}

}  // namespace

double tv_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("tv_distance: bin structure mismatch");
  const auto na = normalize(a);
  const auto nb = normalize(b);
  double s = 0.0;
  for (std::size_t i = 0; i < na.size(); ++i) s += std::abs(na[i] - nb[i]);
  return std::clamp(0.5 * s, 0.0, 1.0);
}

double tv_distance(const EmpiricalHistogram& a, const EmpiricalHistogram& b) {
  if (a.edges != b.edges) throw ValidationError("tv_distance: histograms have different edges");
  return tv_distance(a.counts, b.counts);
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("ks_statistic: bin structure mismatch");
  const auto na = normalize(a);
  const auto nb = normalize(b);
  double ca = 0.0, cb = 0.0, best = 0.0;
  for (std::size_t i = 0; i < na.size(); ++i) {
    ca += na[i];
    cb += nb[i];
    best = std::max(best, std::abs(ca - cb));
  }
  return best;
}

void write_histogram_csv(std::ostream& os, const EmpiricalHistogram& h) {
  os << "edge_lo,edge_hi,count\n";
  for (std::size_t i = 0; i < h.bins(); ++i) {
    os << fmt::format("{:.17g},{:.17g},{:.17g}\n", h.edges[i], h.edges[i + 1], h.counts[i]);
  }
}

nlohmann::json to_json(const EmpiricalHistogram& h) {
  return {{"edges", h.edges}, {"counts", h.counts}, {"total", h.total}};
}

std::vector<double> generated_samples(const Mlp& generator, std::size_t cls, std::size_t conditions,
                                      const LatentSpec& latent, std::size_t n, Rng& rng) {
  const auto h = one_hot(cls, conditions);
  std::vector<double> out(n);
  for (auto& v : out) v = generate(generator, latent.sample(rng), h);
  return out;
}

ClassMetrics per_class_metrics(const Mlp& generator, const SyntheticDataset& ds, const JointPMF& data_pmf,
                               const LatentSpec& latent, std::size_t n, Rng& rng) {
  if (n < 1) throw ValidationError("per_class_metrics needs at least one sample");
  if (data_pmf.outcomes() != ds.bins || data_pmf.conditions() != ds.condition_count()) {
    throw ValidationError("data pmf does not match the dataset bins");
  }
  const auto edges = uniform_edges(ds.lo, ds.hi, ds.bins);
  ClassMetrics out;
  for (std::size_t h = 0; h < ds.condition_count(); ++h) {
    const auto samples = generated_samples(generator, h, ds.condition_count(), latent, n, rng);
    const auto hist = histogram(samples, edges);
    const auto target = data_pmf.conditional(h);
    out.tv.push_back(tv_distance(hist.counts, target));
    out.ks.push_back(ks_statistic(hist.counts, target));
  }
  return out;
}

std::vector<double> per_class_tv(const Mlp& generator, const SyntheticDataset& ds, const JointPMF& data_pmf,
                                 const LatentSpec& latent, std::size_t n, Rng& rng) {
  return per_class_metrics(generator, ds, data_pmf, latent, n, rng).tv;
}

DOutputDensities d_output_densities(const Mlp& discriminator, const SyntheticDataset& ds, const Mlp& generator,
                                    const LatentSpec& latent, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("d_output_densities needs n >= 1");
  const std::size_t H = ds.condition_count();
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, H - 1);
  std::vector<double> matched(n), mismatched(n), generated(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = pick(rng);
    const auto h = one_hot(c, H);
    matched[i] = discriminate(discriminator, ds.classes[c].sample(rng), h);
    mismatched[i] = discriminate(discriminator, ds.mismatch_sampler(c).sample(rng), h);
    generated[i] = discriminate(discriminator, generate(generator, latent.sample(rng), h), h);
  }
  const auto edges = uniform_edges(0.0, 1.0, kDensityBins);
  return {histogram(matched, edges), histogram(mismatched, edges), histogram(generated, edges)};
}

DOutputDensities pushforward_densities(const DiscriminatorTable& d, const JointPMF& data,
                                       const JointPMF& mismatched, const GeneratorPMF& generator) {
  if (d.outcomes() != data.outcomes() || d.conditions() != data.conditions() ||
      mismatched.outcomes() != data.outcomes() || mismatched.conditions() != data.conditions() ||
      generator.outcomes() != data.outcomes() || generator.conditions() != data.conditions()) {
    throw ValidationError("pushforward_densities: dimension mismatch");
  }
  const auto edges = uniform_edges(0.0, 1.0, kDensityBins);
  const auto values = d.values().flat();
  const Table pg = generator.joint();
  return {weighted_histogram(values, data.masses().flat(), edges),
          weighted_histogram(values, mismatched.masses().flat(), edges),
          weighted_histogram(values, pg.flat(), edges)};
}

const AlgorithmResult& ExperimentReport::result(Algorithm algorithm) const {
  for (const auto& r : results)
    if (r.algorithm == algorithm) return r;
  throw ValidationError("experiment report has no result for " + std::string(to_string(algorithm)));
}

AlgorithmResult evaluate_run(const SyntheticDataset& ds, const TrainConfig& cfg, TrainResult run) {
  const JointPMF data_pmf = discretize(ds);
  Rng eval_rng = evaluation_rng(cfg.seed, cfg.iterations);
  ClassMetrics metrics = per_class_metrics(run.generator, ds, data_pmf, cfg.latent, cfg.eval_samples, eval_rng);
  DOutputDensities densities =
      d_output_densities(run.discriminator, ds, run.generator, cfg.latent, cfg.eval_samples, cfg.seed);
  return {cfg.algorithm, std::move(metrics.tv), std::move(metrics.ks), std::move(densities),
          std::move(run.history)};
}

ExperimentReport mismatch_experiment(const SyntheticDataset& base,
                                     const std::optional<std::vector<GaussianMixture>>& override_sampler,
                                     const TrainConfig& cfg) {
  SyntheticDataset ds = base;
  if (override_sampler) ds.mismatch_override = override_sampler;
  ds.validate();

  ExperimentReport report;
  report.seed = cfg.seed;
  report.config = {{"dataset", dataset_to_json(ds)}, {"run", to_json(cfg)}};
  for (Algorithm algorithm : {Algorithm::GanCls, Algorithm::ModifiedGanCls}) {
    TrainConfig run_cfg = cfg;
    run_cfg.algorithm = algorithm;
    report.results.push_back(evaluate_run(ds, run_cfg, train(ds, run_cfg)));
  }
  return report;
}

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& r : report.results) {
    results.push_back({{"algorithm", to_string(r.algorithm)},
                       {"tv", r.tv},
                       {"ks", r.ks},
                       {"d_output_densities",
                        {{"matched", to_json(r.densities.matched)},
                         {"mismatched", to_json(r.densities.mismatched)},
                         {"generated", to_json(r.densities.generated)}}}});
  }
  return {{"seed", report.seed}, {"config", report.config}, {"results", std::move(results)}};
}

}  // namespace gancls
