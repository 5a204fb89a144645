#include "gancls/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

namespace gancls {

JointPMF JointPMF::from_masses(const Table& masses) {
  if (masses.rows() == 0 || masses.cols() == 0) {
    throw ValidationError("joint pmf needs at least one outcome and one condition");
  }
  double total = 0.0;
  for (double v : masses.flat()) {
    if (!std::isfinite(v)) throw ValidationError("joint pmf mass is not finite");
    if (v < 0.0) throw ValidationError("joint pmf mass is negative");
    total += v;
  }
  if (total <= 0.0) throw ValidationError("joint pmf masses are all zero");
  Table normalized = masses;
  for (double& v : normalized.flat()) v /= total;
  return JointPMF(std::move(normalized));
}

JointPMF make_joint_pmf(const Table& masses) { return JointPMF::from_masses(masses); }

std::vector<double> JointPMF::condition_marginal() const {
  std::vector<double> out(conditions());
  for (std::size_t h = 0; h < conditions(); ++h) out[h] = masses_.column_sum(h);
  return out;
}

std::vector<double> JointPMF::outcome_marginal() const {
  std::vector<double> out(outcomes(), 0.0);
  for (std::size_t x = 0; x < outcomes(); ++x)
    for (std::size_t h = 0; h < conditions(); ++h) out[x] += masses_(x, h);
  return out;
}

std::vector<double> JointPMF::conditional(std::size_t h) const {
  std::vector<double> col = masses_.column(h);
  const double total = std::accumulate(col.begin(), col.end(), 0.0);
  if (total <= 0.0) return std::vector<double>(outcomes(), 1.0 / static_cast<double>(outcomes()));
  for (double& v : col) v /= total;
  return col;
}

GeneratorPMF::GeneratorPMF(Table conditional, std::vector<double> condition_marginal)
    : conditional_(std::move(conditional)), marginal_(std::move(condition_marginal)) {
  if (conditional_.rows() == 0 || conditional_.cols() == 0) {
    throw ValidationError("generator pmf needs at least one outcome and one condition");
  }
  if (marginal_.size() != conditional_.cols()) {
    throw ValidationError("condition marginal length does not match generator conditions");
  }
  for (double v : conditional_.flat()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("generator conditional entries must be finite and nonnegative");
    }
  }
  for (std::size_t h = 0; h < conditional_.cols(); ++h) {
    if (std::abs(conditional_.column_sum(h) - 1.0) > kMassTolerance) {
      throw ValidationError("generator conditional column " + std::to_string(h) +
                            " does not sum to 1");
    }
  }
  double total = 0.0;
  for (double v : marginal_) {
    if (!(v >= 0.0)) throw ValidationError("condition marginal entries must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw ValidationError("condition marginal does not sum to 1");
  }
}

Table GeneratorPMF::joint() const {
  Table out(outcomes(), conditions());
  for (std::size_t x = 0; x < outcomes(); ++x)
    for (std::size_t h = 0; h < conditions(); ++h)
      out(x, h) = conditional_(x, h) * marginal_[h];
  return out;
}

GeneratorPMF GeneratorPMF::matching(const JointPMF& data) {
  Table cond(data.outcomes(), data.conditions());
  for (std::size_t h = 0; h < data.conditions(); ++h) cond.set_column(h, data.conditional(h));
  return GeneratorPMF(std::move(cond), data.condition_marginal());
}

GeneratorPMF GeneratorPMF::uniform(const JointPMF& data) {
  Table cond(data.outcomes(), data.conditions(), 1.0 / static_cast<double>(data.outcomes()));
  return GeneratorPMF(std::move(cond), data.condition_marginal());
}

MismatchRule::MismatchRule(std::vector<std::size_t> target) : target_(std::move(target)) {
  if (target_.size() < 2) throw ValidationError("mismatch rule needs at least two classes");
  for (std::size_t h = 0; h < target_.size(); ++h) {
    if (target_[h] >= target_.size()) {
      throw ValidationError("mismatch rule maps class " + std::to_string(h) +
                            " outside the class range");
    }
    if (target_[h] == h) {
      throw ValidationError("mismatch rule maps class " + std::to_string(h) + " to itself");
    }
  }
}

MismatchRule MismatchRule::swap(std::size_t classes) {
  if (classes < 2 || classes % 2 != 0) {
    throw ValidationError("swap rule needs an even number of classes");
  }
  std::vector<std::size_t> t(classes);
  for (std::size_t h = 0; h < classes; ++h) t[h] = h ^ 1U;
  return MismatchRule(std::move(t));
}

MismatchRule MismatchRule::cycle(std::size_t classes) {
  std::vector<std::size_t> t(classes);
  for (std::size_t h = 0; h < classes; ++h) t[h] = (h + 1) % classes;
  return MismatchRule(std::move(t));
}

MismatchRule MismatchRule::derangement(std::size_t classes, Rng& rng) {
  if (classes < 2) throw ValidationError("derangement needs at least two classes");
  std::vector<std::size_t> t(classes);
  // Rejection sampling keeps the draw uniform over derangements.
  for (;;) {
    std::iota(t.begin(), t.end(), std::size_t{0});
    std::shuffle(t.begin(), t.end(), rng);
    bool fixed_point = false;
    for (std::size_t h = 0; h < classes; ++h) fixed_point = fixed_point || t[h] == h;
    if (!fixed_point) return MismatchRule(t);
  }
}

JointPMF mismatch_joint(const JointPMF& data, const MismatchRule& rule) {
  if (rule.classes() != data.conditions()) {
    throw ValidationError("mismatch rule class count does not match the joint pmf");
  }
  const std::vector<double> marginal = data.condition_marginal();
  Table out(data.outcomes(), data.conditions());
  for (std::size_t h = 0; h < data.conditions(); ++h) {
    const std::vector<double> source = data.conditional(rule(h));
    for (std::size_t x = 0; x < data.outcomes(); ++x) out(x, h) = source[x] * marginal[h];
  }
  return JointPMF::from_masses(out);
}

void GaussianMixture::validate() const {
  if (weights.empty()) throw ValidationError("mixture needs at least one component");
  if (means.size() != weights.size() || stds.size() != weights.size()) {
    throw ValidationError("mixture weights, means and stds must have equal lengths");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("mixture weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw ValidationError("mixture weights must sum to 1");
  }
  for (double s : stds) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("mixture std-devs must be > 0");
  }
  for (double mu : means) {
    if (!std::isfinite(mu)) throw ValidationError("mixture means must be finite");
  }
}

double GaussianMixture::cdf(double x) const {
  double out = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    out += weights[k] * 0.5 * std::erfc(-(x - means[k]) / (stds[k] * std::numbers::sqrt2));
  }
  return out;
}

double GaussianMixture::sample(Rng& rng) const {
  std::size_t k = 0;
  if (weights.size() > 1) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    k = weights.size() - 1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) {
        k = i;
        break;
      }
    }
  }
  return std::normal_distribution<double>(means[k], stds[k])(rng);
}

void SyntheticDataset::validate() const {
  if (classes.size() < 2) throw ConfigError("dataset needs at least two condition classes");
  for (const auto& c : classes) c.validate();
  if (mismatch_rule.classes() != classes.size()) {
    throw ValidationError("mismatch rule class count does not match the dataset");
  }
  if (mismatch_override) {
    if (mismatch_override->size() != classes.size()) {
      throw ValidationError("mismatch override needs one sampler per class");
    }
    for (const auto& c : *mismatch_override) c.validate();
  }
  if (!(lo < hi)) throw ValidationError("dataset range needs lo < hi");
  if (bins < 2) throw ValidationError("dataset needs at least two bins");
}

const GaussianMixture& SyntheticDataset::mismatch_sampler(std::size_t h) const {
  if (mismatch_override) return mismatch_override->at(h);
  return classes.at(mismatch_rule(h));
}

namespace {

const nlohmann::json& require(const nlohmann::json& doc, const char* field) {
  if (!doc.is_object() || !doc.contains(field)) {
    throw ConfigError(std::string("missing field: ") + field);
  }
  return doc.at(field);
}

nlohmann::json mixture_to_json(const GaussianMixture& m) {
  return {{"weights", m.weights}, {"means", m.means}, {"stds", m.stds}};
}

}  // namespace

GaussianMixture mixture_from_json(const nlohmann::json& doc) {
  GaussianMixture m;
  try {
    m.means = require(doc, "means").get<std::vector<double>>();
    m.stds = require(doc, "stds").get<std::vector<double>>();
    if (doc.contains("weights")) {
      m.weights = doc.at("weights").get<std::vector<double>>();
    } else {
      m.weights.assign(m.means.size(), 1.0 / static_cast<double>(m.means.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed mixture: ") + e.what());
  }
  m.validate();
  return m;
}

SyntheticDataset dataset_from_json(const nlohmann::json& doc, std::uint64_t seed) {
  std::vector<GaussianMixture> classes;
  for (const auto& c : require(doc, "classes")) classes.push_back(mixture_from_json(c));
  if (classes.size() < 2) throw ConfigError("dataset needs at least two condition classes");

  std::optional<MismatchRule> rule;
  if (doc.contains("mismatch_rule")) {
    const auto& r = doc.at("mismatch_rule");
    if (r.is_string()) {
      const auto name = r.get<std::string>();
      if (name == "swap") {
        rule = MismatchRule::swap(classes.size());
      } else if (name == "cycle") {
        rule = MismatchRule::cycle(classes.size());
      } else if (name == "derangement") {
        Rng rng(seed);
        rule = MismatchRule::derangement(classes.size(), rng);
      } else {
        throw ConfigError("unknown mismatch_rule: " + name);
      }
    } else if (r.is_array()) {
      rule = MismatchRule(r.get<std::vector<std::size_t>>());
    } else {
      throw ConfigError("mismatch_rule must be a string or an array");
    }
  } else {
    Rng rng(seed);
    rule = MismatchRule::derangement(classes.size(), rng);
  }

  SyntheticDataset ds{std::move(classes), *rule, std::nullopt};
  if (doc.contains("mismatch_override") && !doc.at("mismatch_override").is_null()) {
    std::vector<GaussianMixture> over;
    for (const auto& c : doc.at("mismatch_override")) over.push_back(mixture_from_json(c));
    ds.mismatch_override = std::move(over);
  }
  if (doc.contains("range")) {
    const auto range = doc.at("range").get<std::vector<double>>();
    if (range.size() != 2) throw ConfigError("range must be [lo, hi]");
    ds.lo = range[0];
    ds.hi = range[1];
  }
  if (doc.contains("bins")) ds.bins = doc.at("bins").get<std::size_t>();
  ds.validate();
  return ds;
}

nlohmann::json dataset_to_json(const SyntheticDataset& ds) {
  nlohmann::json doc;
  doc["classes"] = nlohmann::json::array();
  for (const auto& c : ds.classes) doc["classes"].push_back(mixture_to_json(c));
  doc["range"] = {ds.lo, ds.hi};
  doc["bins"] = ds.bins;
  doc["mismatch_rule"] = ds.mismatch_rule.targets();
  if (ds.mismatch_override) {
    doc["mismatch_override"] = nlohmann::json::array();
    for (const auto& c : *ds.mismatch_override) doc["mismatch_override"].push_back(mixture_to_json(c));
  }
  return doc;
}

std::vector<double> one_hot(std::size_t cls, std::size_t classes) {
  std::vector<double> v(classes, 0.0);
  v.at(cls) = 1.0;
  return v;
}

std::vector<MinibatchTriple> sample_minibatch(const SyntheticDataset& ds, std::size_t m,
                                              Rng& rng, Pairing pairing) {
  if (ds.condition_count() < 2) throw ConfigError("minibatch sampling needs at least two classes");
  if (m == 0) throw ValidationError("minibatch size must be at least 1");
  const std::size_t classes = ds.condition_count();
  std::uniform_int_distribution<std::size_t> pick(0, classes - 1);
  const std::size_t mismatched_tag = ds.mismatch_override ? classes : 0;

  std::vector<MinibatchTriple> batch(m);
  std::size_t shared = pick(rng);
  for (auto& t : batch) {
    const std::size_t c = pairing == Pairing::SharedPair ? shared : pick(rng);
    t.condition = c;
    t.matched_outcome = ds.classes[c].sample(rng);
    t.mismatched_outcome = ds.mismatch_sampler(c).sample(rng);
    t.mismatched_class = ds.mismatch_override ? mismatched_tag : ds.mismatch_rule(c);
  }
  return batch;
}

namespace {

JointPMF integrate_bins(const std::vector<const GaussianMixture*>& per_class, std::size_t bins,
                        double lo, double hi) {
  if (bins < 2) throw ValidationError("discretize needs at least two bins");
  if (!(lo < hi)) throw ValidationError("discretize needs lo < hi");
  const std::size_t classes = per_class.size();
  const double width = (hi - lo) / static_cast<double>(bins);
  Table masses(bins, classes);
  for (std::size_t h = 0; h < classes; ++h) {
    double prev = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double upper = b + 1 == bins ? 1.0 : per_class[h]->cdf(lo + width * static_cast<double>(b + 1));
      masses(b, h) = (upper - prev) / static_cast<double>(classes);
      prev = upper;
    }
  }
  return JointPMF::from_masses(masses);
}

}  // namespace

JointPMF discretize(const SyntheticDataset& ds, std::size_t bins, double lo, double hi) {
  std::vector<const GaussianMixture*> per_class;
  for (const auto& c : ds.classes) per_class.push_back(&c);
  return integrate_bins(per_class, bins, lo, hi);
}

JointPMF discretize(const SyntheticDataset& ds) { return discretize(ds, ds.bins, ds.lo, ds.hi); }

JointPMF discretize_mismatch(const SyntheticDataset& ds) {
  std::vector<const GaussianMixture*> per_class;
  for (std::size_t h = 0; h < ds.condition_count(); ++h) per_class.push_back(&ds.mismatch_sampler(h));
  return integrate_bins(per_class, ds.bins, ds.lo, ds.hi);
}

}  // namespace gancls
