#include "gancls/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gancls {

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::OriginalGan: return "gan";
    case ObjectiveKind::ConditionalGan: return "cgan";
    case ObjectiveKind::GanCls: return "gancls";
    case ObjectiveKind::ModifiedGanCls: return "modified";
  }
  return "unknown";
}

ObjectiveKind objective_kind_from_string(std::string_view name) {
  if (name == "gan" || name == "OriginalGan") return ObjectiveKind::OriginalGan;
  if (name == "cgan" || name == "ConditionalGan") return ObjectiveKind::ConditionalGan;
  if (name == "gancls" || name == "GanCls") return ObjectiveKind::GanCls;
  if (name == "modified" || name == "ModifiedGanCls") return ObjectiveKind::ModifiedGanCls;
  throw ConfigError("unknown objective kind: " + std::string(name));
}

bool needs_mismatch(ObjectiveKind kind) {
  return kind == ObjectiveKind::GanCls || kind == ObjectiveKind::ModifiedGanCls;
}

namespace {

double clamp_d(double v) {
  if (std::isnan(v)) throw ValidationError("discriminator value is NaN");
  return std::clamp(v, kDiscriminatorClamp, 1.0 - kDiscriminatorClamp);
}

void check_inputs(ObjectiveKind kind, const JointPMF& data, const std::optional<JointPMF>& mismatched,
                  const GeneratorPMF& generator) {
  if (generator.outcomes() != data.outcomes() || generator.conditions() != data.conditions()) {
    throw ValidationError("generator and data dimensions disagree");
  }
  if (needs_mismatch(kind)) {
    if (!mismatched) {
      throw ValidationError(std::string(to_string(kind)) + " requires a mismatched distribution");
    }
    if (mismatched->outcomes() != data.outcomes() || mismatched->conditions() != data.conditions()) {
      throw ValidationError("mismatched and data dimensions disagree");
    }
  } else if (mismatched) {
    throw ValidationError(std::string(to_string(kind)) + " takes no mismatched distribution");
  }
}

}  // namespace

DiscriminatorTable::DiscriminatorTable(Table values) : values_(std::move(values)) {
  for (double& v : values_.flat()) v = clamp_d(v);
}

DiscriminatorTable::DiscriminatorTable(std::size_t outcomes, std::size_t conditions, double fill)
    : DiscriminatorTable(Table(outcomes, conditions, fill)) {}

ObjectiveTerms objective_terms(ObjectiveKind kind, const JointPMF& data,
                               const std::optional<JointPMF>& mismatched,
                               const GeneratorPMF& generator) {
  check_inputs(kind, data, mismatched, generator);
  const std::size_t X = data.outcomes();
  const std::size_t H = data.conditions();
  const Table pg = generator.joint();
  const Table& pd = data.masses();

  switch (kind) {
    case ObjectiveKind::OriginalGan: {
      ObjectiveTerms t{Table(X, 1), Table(X, 1), 1.0};
      for (std::size_t x = 0; x < X; ++x)
        for (std::size_t h = 0; h < H; ++h) {
          t.real(x, 0) += pd(x, h);
          t.fake(x, 0) += pg(x, h);
        }
      return t;
    }
    case ObjectiveKind::ConditionalGan:
      return {pd, pg, 1.0};
    case ObjectiveKind::GanCls: {
      const Table& pm = mismatched->masses();
      ObjectiveTerms t{pd, Table(X, H), 0.5};
      for (std::size_t x = 0; x < X; ++x)
        for (std::size_t h = 0; h < H; ++h) t.fake(x, h) = 0.5 * (pm(x, h) + pg(x, h));
      return t;
    }
    case ObjectiveKind::ModifiedGanCls: {
      const Table& pm = mismatched->masses();
      ObjectiveTerms t{Table(X, H), Table(X, H), 0.5};
      for (std::size_t x = 0; x < X; ++x)
        for (std::size_t h = 0; h < H; ++h) {
          t.real(x, h) = 0.5 * (pd(x, h) + pm(x, h));
          t.fake(x, h) = 0.5 * (pg(x, h) + pm(x, h));
        }
      return t;
    }
  }
  throw ValidationError("unknown objective kind");
}

double value(ObjectiveKind kind, const JointPMF& data, const std::optional<JointPMF>& mismatched,
             const GeneratorPMF& generator, const DiscriminatorTable& d) {
  const ObjectiveTerms t = objective_terms(kind, data, mismatched, generator);
  if (d.outcomes() != t.real.rows() || d.conditions() != t.real.cols()) {
    throw ValidationError("discriminator table dimensions disagree with the objective");
  }
  double v = 0.0;
  for (std::size_t x = 0; x < t.real.rows(); ++x)
    for (std::size_t h = 0; h < t.real.cols(); ++h) {
      if (t.real(x, h) > 0.0) v += t.real(x, h) * std::log(d(x, h));
      if (t.fake(x, h) > 0.0) v += t.fake(x, h) * std::log1p(-d(x, h));
    }
  return v;
}

DiscriminatorTable optimal_discriminator(ObjectiveKind kind, const JointPMF& data,
                                         const std::optional<JointPMF>& mismatched,
                                         const GeneratorPMF& generator) {
  const ObjectiveTerms t = objective_terms(kind, data, mismatched, generator);
  Table d(t.real.rows(), t.real.cols());
  for (std::size_t x = 0; x < d.rows(); ++x)
    for (std::size_t h = 0; h < d.cols(); ++h) {
      const double denom = t.real(x, h) + t.fake(x, h);
      d(x, h) = denom > 0.0 ? t.real(x, h) / denom : 0.5;
    }
  return DiscriminatorTable(std::move(d));
}

double kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("kl: length mismatch");
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    out += p[i] * std::log(p[i] / q[i]);
  }
  return out;
}

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("jsd: length mismatch");
  // Accumulated term by term so that jsd(p, q) and jsd(q, p) round identically.
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    double a = p[i] > 0.0 ? p[i] * std::log(p[i] / m) : 0.0;
    double b = q[i] > 0.0 ? q[i] * std::log(q[i] / m) : 0.0;
    out += 0.5 * (std::min(a, b) + std::max(a, b));
  }
  return std::clamp(out, 0.0, std::numbers::ln2);
}

double value_at_optimal_d(ObjectiveKind kind, const JointPMF& data,
                          const std::optional<JointPMF>& mismatched,
                          const GeneratorPMF& generator) {
  const ObjectiveTerms t = objective_terms(kind, data, mismatched, generator);
  return 2.0 * jsd(t.real.flat(), t.fake.flat()) - 2.0 * std::numbers::ln2;
}

}  // namespace gancls
