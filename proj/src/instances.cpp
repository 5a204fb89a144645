#include "gancls/instances.hpp"

#include <algorithm>
#include <string>

namespace gancls {

JointPMF random_joint(std::size_t outcomes, std::size_t conditions, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  Table t(outcomes, conditions);
  for (double& v : t.flat()) v = expo(rng);
  return JointPMF::from_masses(t);
}

MismatchShape mismatch_shape_from_string(std::string_view name) {
  if (name == "independent") return MismatchShape::Independent;
  if (name == "cycle") return MismatchShape::Cycle;
  if (name == "disjoint") return MismatchShape::Disjoint;
  if (name == "equal") return MismatchShape::Equal;
  if (name == "feasible") return MismatchShape::Feasible;
  throw ConfigError("unknown mismatch shape: " + std::string(name));
}

namespace {

std::vector<double> dirichlet(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> v(n);
  double total = 0.0;
  for (double& x : v) total += (x = expo(rng));
  for (double& x : v) x /= total;
  return v;
}

}  // namespace

Instance random_instance(std::size_t outcomes, std::size_t conditions, MismatchShape shape, Rng& rng) {
  switch (shape) {
    case MismatchShape::Independent: {
      JointPMF data = random_joint(outcomes, conditions, rng);
      return {data, random_joint(outcomes, conditions, rng)};
    }
    case MismatchShape::Cycle: {
      JointPMF data = random_joint(outcomes, conditions, rng);
      return {data, mismatch_joint(data, MismatchRule::cycle(conditions))};
    }
    case MismatchShape::Equal: {
      JointPMF data = random_joint(outcomes, conditions, rng);
      return {data, data};
    }
    case MismatchShape::Disjoint: {
      if (outcomes < 2) throw ValidationError("disjoint instances need at least two outcomes");
      const std::vector<double> marginal = dirichlet(conditions, rng);
      Table pd(outcomes, conditions);
      Table pm(outcomes, conditions);
      std::exponential_distribution<double> expo(1.0);
      for (std::size_t h = 0; h < conditions; ++h) {
        double sd = 0.0, sm = 0.0;
        for (std::size_t x = 0; x < outcomes; ++x) {
          Table& target = x % 2 == 0 ? pd : pm;
          target(x, h) = expo(rng);
          (x % 2 == 0 ? sd : sm) += target(x, h);
        }
        for (std::size_t x = 0; x < outcomes; ++x) {
          if (x % 2 == 0) pd(x, h) *= marginal[h] / sd;
          else pm(x, h) *= marginal[h] / sm;
        }
      }
      return {JointPMF::from_masses(pd), JointPMF::from_masses(pm)};
    }
    case MismatchShape::Feasible: {
      JointPMF data = random_joint(outcomes, conditions, rng);
      const std::vector<double> marginal = data.condition_marginal();
      Table pm(outcomes, conditions);
      for (std::size_t h = 0; h < conditions; ++h) {
        const std::vector<double> pdc = data.conditional(h);
        const std::vector<double> u = dirichlet(outcomes, rng);
        // Largest lambda with (1 - lambda) pd + lambda u <= 2 pd, then shrink.
        double lambda = 1.0;
        for (std::size_t x = 0; x < outcomes; ++x)
          if (u[x] > pdc[x]) lambda = std::min(lambda, pdc[x] / (u[x] - pdc[x]));
        lambda *= 0.9;
        for (std::size_t x = 0; x < outcomes; ++x)
          pm(x, h) = ((1.0 - lambda) * pdc[x] + lambda * u[x]) * marginal[h];
      }
      return {data, JointPMF::from_masses(pm)};
    }
  }
  throw ValidationError("unknown mismatch shape");
}

}  // namespace gancls
