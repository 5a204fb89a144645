#pragma once

// Random (p_d, p_mis) instances for solver checks and experiments.

#include <optional>
#include <string_view>

#include "gancls/dist.hpp"

namespace gancls {

struct Instance {
  JointPMF data;
  std::optional<JointPMF> mismatched;
};

/// Dirichlet(1) draw over all X*H cells (full support almost surely).
JointPMF random_joint(std::size_t outcomes, std::size_t conditions, Rng& rng);

enum class MismatchShape {
  /// Independent Dirichlet draw.
  Independent,
  /// mismatch_joint with the cycle rule.
  Cycle,
  /// p_d on even outcomes, p_mis on odd outcomes, same condition marginal.
  Disjoint,
  /// p_mis = p_d.
  Equal,
  /// Same condition marginal as p_d and 2 p_d - p_mis >= 0 everywhere.
  Feasible,
};

MismatchShape mismatch_shape_from_string(std::string_view name);

Instance random_instance(std::size_t outcomes, std::size_t conditions, MismatchShape shape, Rng& rng);

}  // namespace gancls
