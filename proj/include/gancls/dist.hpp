#pragma once

// Discrete conditional distributions over (outcome-bin, condition) grids and
// the continuous synthetic datasets that stand in for paired image/text data.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gancls/table.hpp"

namespace gancls {

using Rng = std::mt19937_64;

inline constexpr double kMassTolerance = 1e-12;

/// Joint pmf p(x, h) over X outcome bins and H conditions.
class JointPMF {
 public:
  /// Normalizes `masses` by their total. Negative entries, non-finite entries
  /// and an all-zero table are rejected.
  static JointPMF from_masses(const Table& masses);

  std::size_t outcomes() const { return masses_.rows(); }
  std::size_t conditions() const { return masses_.cols(); }
  double operator()(std::size_t x, std::size_t h) const { return masses_(x, h); }
  const Table& masses() const { return masses_; }

  /// p(h), summed over outcomes.
  std::vector<double> condition_marginal() const;
  /// p(x), summed over conditions.
  std::vector<double> outcome_marginal() const;
  /// p(x | h); a uniform column when p(h) = 0.
  std::vector<double> conditional(std::size_t h) const;

 private:
  explicit JointPMF(Table masses) : masses_(std::move(masses)) {}
  Table masses_;
};

JointPMF make_joint_pmf(const Table& masses);

/// Generator distribution p_g(x | h) together with the condition marginal it
/// is driven by. The induced joint is conditional(x, h) * marginal(h).
class GeneratorPMF {
 public:
  GeneratorPMF(Table conditional, std::vector<double> condition_marginal);

  std::size_t outcomes() const { return conditional_.rows(); }
  std::size_t conditions() const { return conditional_.cols(); }
  const Table& conditional() const { return conditional_; }
  const std::vector<double>& condition_marginal() const { return marginal_; }
  Table joint() const;

  /// Generator whose conditionals equal those of `data` (uniform where p(h) = 0).
  static GeneratorPMF matching(const JointPMF& data);
  /// Uniform conditionals driven by the condition marginal of `data`.
  static GeneratorPMF uniform(const JointPMF& data);

 private:
  Table conditional_;
  std::vector<double> marginal_;
};

/// Maps each condition class to the class whose outcomes are used as its
/// mismatched samples. Never maps a class to itself.
class MismatchRule {
 public:
  explicit MismatchRule(std::vector<std::size_t> target);

  /// Pairs 0<->1, 2<->3, ...; requires an even class count.
  static MismatchRule swap(std::size_t classes);
  /// h -> (h + 1) mod H.
  static MismatchRule cycle(std::size_t classes);
  /// Uniformly random derangement.
  static MismatchRule derangement(std::size_t classes, Rng& rng);

  std::size_t operator()(std::size_t h) const { return target_.at(h); }
  std::size_t classes() const { return target_.size(); }
  const std::vector<std::size_t>& targets() const { return target_; }

 private:
  std::vector<std::size_t> target_;
};

/// p_mis(x, h) = p(x | rule(h)) * p(h).
JointPMF mismatch_joint(const JointPMF& data, const MismatchRule& rule);

/// One-dimensional Gaussian mixture.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> stds;

  void validate() const;
  double cdf(double x) const;
  double sample(Rng& rng) const;
};

/// Continuous conditional dataset: one mixture per condition class. Conditions
/// are uniformly distributed.
struct SyntheticDataset {
  std::vector<GaussianMixture> classes;
  MismatchRule mismatch_rule;
  /// When present, mismatched outcomes for condition h are drawn from
  /// override[h] instead of classes[rule(h)].
  std::optional<std::vector<GaussianMixture>> mismatch_override;
  double lo = -4.0;
  double hi = 4.0;
  std::size_t bins = 20;

  std::size_t condition_count() const { return classes.size(); }
  void validate() const;
  /// Sampler used for mismatched outcomes paired with condition h.
  const GaussianMixture& mismatch_sampler(std::size_t h) const;
};

/// Parses the dataset document. A missing mismatch_rule selects a random
/// derangement drawn from `seed`.
SyntheticDataset dataset_from_json(const nlohmann::json& doc, std::uint64_t seed);
nlohmann::json dataset_to_json(const SyntheticDataset& ds);
GaussianMixture mixture_from_json(const nlohmann::json& doc);

std::vector<double> one_hot(std::size_t cls, std::size_t classes);

/// {x1, t1, x2}: an outcome, its own condition, and an outcome drawn for the
/// same condition from the mismatched sampler.
struct MinibatchTriple {
  double matched_outcome = 0.0;
  std::size_t condition = 0;
  double mismatched_outcome = 0.0;
  /// Class that generated mismatched_outcome (rule(condition)); equals the
  /// number of classes when it came from an override sampler.
  std::size_t mismatched_class = 0;
};

enum class Pairing {
  /// A fresh matched class for every triple.
  PerTriple,
  /// One class pair shared by the whole minibatch.
  SharedPair,
};

std::vector<MinibatchTriple> sample_minibatch(const SyntheticDataset& ds, std::size_t m,
                                              Rng& rng, Pairing pairing = Pairing::PerTriple);

/// Integrates each class mixture over uniform bins on [lo, hi]; tail mass is
/// folded into the end bins and conditions are weighted uniformly.
JointPMF discretize(const SyntheticDataset& ds, std::size_t bins, double lo, double hi);
JointPMF discretize(const SyntheticDataset& ds);
/// Discretized mismatched distribution, honoring the override when present.
JointPMF discretize_mismatch(const SyntheticDataset& ds);

}  // namespace gancls
