#pragma once

// Minimization of V(D*_G, G) over the generator's per-condition simplexes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gancls/dist.hpp"
#include "gancls/objective.hpp"

namespace gancls {

struct SolveOptions {
  std::size_t max_iters = 20000;
  /// Relative value change treated as stagnation.
  double tol_value = 1e-12;
  /// Converged once the projected-gradient norm drops to this.
  double tol_grad = 1e-10;
  /// Initial trial step; later trial steps are Barzilai-Borwein estimates.
  double step_size = 0.1;
  std::size_t restarts = 4;
  std::uint64_t seed = 0;
  /// Keep the objective sequence of the winning restart.
  bool record_trace = false;

  void validate() const;
};

struct SolveReport {
  ObjectiveKind kind;
  GeneratorPMF argmin;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// True iff the unconstrained closed-form fixed point is a valid pmf.
  bool feasible_closed_form = false;
  std::vector<double> restart_values;
  std::vector<double> trace;
};

nlohmann::json to_json(const SolveReport& report);

/// Closed-form fixed-point conditionals, before any projection:
/// (2 p_d - p_mis) / p_d(h) for GanCls, p_d(x | h) for ConditionalGan and
/// ModifiedGanCls, the outcome marginal of p_d for OriginalGan. Columns with
/// p_d(h) = 0 are uniform.
Table closed_form_fixed_point(ObjectiveKind kind, const JointPMF& data,
                              const std::optional<JointPMF>& mismatched);
bool is_feasible_pmf(const Table& conditionals);

/// Gradient of V(D*_G, G) with respect to the generator conditionals.
Table generator_gradient(ObjectiveKind kind, const JointPMF& data,
                         const std::optional<JointPMF>& mismatched,
                         const GeneratorPMF& generator);

/// Euclidean projection onto the probability simplex (sort and threshold).
std::vector<double> project_simplex(std::span<const double> v);

/// Projected gradient descent with Armijo backtracking; restart 0 starts from
/// uniform conditionals, the others from Dirichlet(1) draws.
SolveReport solve_generator(ObjectiveKind kind, const JointPMF& data,
                            const std::optional<JointPMF>& mismatched,
                            const SolveOptions& opts = {});

struct GridResult {
  double value = 0.0;
  GeneratorPMF argmin;
  std::size_t points = 0;
};

inline constexpr double kMaxGridPoints = 1e7;

/// Exhaustive search over the lattice {k * step} of the product of simplexes.
GridResult grid_oracle(ObjectiveKind kind, const JointPMF& data,
                       const std::optional<JointPMF>& mismatched, double step);

}  // namespace gancls
