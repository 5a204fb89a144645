#pragma once

// Value functions of the adversarial objectives on discrete (x, h) grids, their
// closed-form optimal discriminators, and the KL / JSD utilities.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gancls/dist.hpp"
#include "gancls/table.hpp"

namespace gancls {

enum class ObjectiveKind {
  OriginalGan,     // E_pd log D(x) + E_pg log(1 - D(x)), condition axis marginalized
  ConditionalGan,  // E_pd log D(x,h) + E_pg log(1 - D(x,h))
  GanCls,          // matching-aware objective with a 1/2-weighted mismatched term
  ModifiedGanCls,  // corrected objective whose optimum recovers p_d
};

std::string_view to_string(ObjectiveKind kind);
/// Accepts "gan", "cgan", "gancls", "modified" and the enumerator names.
ObjectiveKind objective_kind_from_string(std::string_view name);
bool needs_mismatch(ObjectiveKind kind);

inline constexpr double kDiscriminatorClamp = 1e-12;

/// D(x, h) on the discrete grid, clamped into [1e-12, 1 - 1e-12].
class DiscriminatorTable {
 public:
  explicit DiscriminatorTable(Table values);
  DiscriminatorTable(std::size_t outcomes, std::size_t conditions, double fill);

  std::size_t outcomes() const { return values_.rows(); }
  std::size_t conditions() const { return values_.cols(); }
  double operator()(std::size_t x, std::size_t h) const { return values_(x, h); }
  const Table& values() const { return values_; }

 private:
  Table values_;
};

/// Every objective here has the form
///   V(D, G) = sum real(x,h) log D(x,h) + sum fake(x,h) log(1 - D(x,h))
/// where `real` and `fake` are nonnegative tables of unit mass and `fake`
/// depends on p_g affinely with slope `generator_slope`. OriginalGan collapses
/// the condition axis, so its tables have a single column.
struct ObjectiveTerms {
  Table real;
  Table fake;
  double generator_slope = 1.0;
};

ObjectiveTerms objective_terms(ObjectiveKind kind, const JointPMF& data,
                               const std::optional<JointPMF>& mismatched,
                               const GeneratorPMF& generator);

/// Exact discrete expectation V(D, G). Zero-mass cells contribute nothing.
double value(ObjectiveKind kind, const JointPMF& data, const std::optional<JointPMF>& mismatched,
             const GeneratorPMF& generator, const DiscriminatorTable& d);

/// Pointwise maximizer real / (real + fake); 0/0 cells are 1/2.
DiscriminatorTable optimal_discriminator(ObjectiveKind kind, const JointPMF& data,
                                         const std::optional<JointPMF>& mismatched,
                                         const GeneratorPMF& generator);

/// KL(p || q) with 0 log 0 = 0; +infinity when p is not absolutely continuous
/// with respect to q.
double kl(std::span<const double> p, std::span<const double> q);
double jsd(std::span<const double> p, std::span<const double> q);

/// V(D*_G, G) through the identity 2 JSD(real || fake) - log 4 on the joint grid.
double value_at_optimal_d(ObjectiveKind kind, const JointPMF& data,
                          const std::optional<JointPMF>& mismatched,
                          const GeneratorPMF& generator);

}  // namespace gancls
