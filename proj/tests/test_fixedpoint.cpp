#include <cmath>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "gancls/fixedpoint.hpp"
#include "gancls/instances.hpp"

using namespace gancls;

namespace {

const double kLog4 = std::log(4.0);

double max_dev_from_conditionals(const GeneratorPMF& g, const JointPMF& data) {
  double dev = 0.0;
  for (std::size_t h = 0; h < data.conditions(); ++h) {
    const auto col = data.conditional(h);
    for (std::size_t x = 0; x < data.outcomes(); ++x) dev = std::max(dev, std::abs(g.conditional()(x, h) - col[x]));
  }
  return dev;
}

double max_dev(const Table& a, const Table& b) {
  double dev = 0.0;
  for (std::size_t i = 0; i < a.flat().size(); ++i) dev = std::max(dev, std::abs(a.flat()[i] - b.flat()[i]));
  return dev;
}

}  // namespace

TEST_CASE("project_simplex examples") {
  const std::vector<double> a = {0.2, 0.8};
  CHECK(project_simplex(a) == a);
  const std::vector<double> b = {2.0, 0.0};
  CHECK(project_simplex(b) == std::vector<double>{1.0, 0.0});
  const std::vector<double> c = {0.6, 0.6};
  CHECK(project_simplex(c) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("project_simplex lands on the simplex and is idempotent") {
  Rng rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(1 + i % 9);
    for (double& e : v) e = n(rng);
    const auto p = project_simplex(v);
    double s = 0.0;
    for (double e : p) {
      CHECK(e >= 0.0);
      s += e;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
    const auto q = project_simplex(p);
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(std::abs(p[k] - q[k]) <= 1e-15);
  }
}

TEST_CASE("solve options are validated") {
  SolveOptions o;
  o.max_iters = 0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o = {};
  o.tol_grad = 0.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o = {};
  o.step_size = -1.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
}

TEST_CASE("modified solver recovers the data conditionals") {
  Rng rng(2024);
  for (int i = 0; i < 30; ++i) {
    const auto shape = i % 3 == 0 ? MismatchShape::Disjoint : MismatchShape::Independent;
    const Instance inst = random_instance(8, 3, shape, rng);
    const SolveReport r = solve_generator(ObjectiveKind::ModifiedGanCls, inst.data, inst.mismatched);
    CHECK(std::abs(r.value + kLog4) <= 1e-6);
    CHECK(max_dev_from_conditionals(r.argmin, inst.data) <= 1e-4);
    CHECK(std::abs(r.value - value_at_optimal_d(ObjectiveKind::ModifiedGanCls, inst.data, inst.mismatched,
                                                r.argmin)) <= 1e-10);
  }
}

TEST_CASE("modified solver recovers p_d on at least 100 instances of every mismatch shape") {
  Rng rng(7);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const auto shape = static_cast<MismatchShape>(i % 5);
    const Instance inst = random_instance(2 + i % 5, 2 + i % 3, shape, rng);
    SolveOptions o;
    o.restarts = 1;
    const SolveReport r = solve_generator(ObjectiveKind::ModifiedGanCls, inst.data, inst.mismatched, o);
    CHECK(max_dev_from_conditionals(r.argmin, inst.data) <= 1e-4);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("gancls with p_mis equal to p_d returns p_d") {
  Rng rng(5);
  const Instance inst = random_instance(6, 2, MismatchShape::Equal, rng);
  const SolveReport r = solve_generator(ObjectiveKind::GanCls, inst.data, inst.mismatched);
  CHECK(r.feasible_closed_form);
  CHECK(max_dev_from_conditionals(r.argmin, inst.data) <= 1e-4);
}

TEST_CASE("gancls feasible case matches 2 p_d - p_mis") {
  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    const Instance inst = random_instance(5, 2, MismatchShape::Feasible, rng);
    const Table target = closed_form_fixed_point(ObjectiveKind::GanCls, inst.data, inst.mismatched);
    REQUIRE(is_feasible_pmf(target));
    // Independent recomputation of the closed form from the joint tables.
    const auto ph = inst.data.condition_marginal();
    for (std::size_t x = 0; x < 5; ++x)
      for (std::size_t h = 0; h < 2; ++h)
        CHECK(std::abs(target(x, h) - (2.0 * inst.data(x, h) - (*inst.mismatched)(x, h)) / ph[h]) <= 1e-12);
    const SolveReport r = solve_generator(ObjectiveKind::GanCls, inst.data, inst.mismatched);
    CHECK(r.feasible_closed_form);
    CHECK(max_dev(r.argmin.conditional(), target) <= 1e-4);
  }
}

TEST_CASE("gancls infeasible case lands on the boundary") {
  const JointPMF pd = make_joint_pmf(Table::from_rows({{0.8}, {0.2}}));
  const JointPMF pm = make_joint_pmf(Table::from_rows({{0.1}, {0.9}}));
  const Table target = closed_form_fixed_point(ObjectiveKind::GanCls, pd, pm);
  CHECK(target(0, 0) == doctest::Approx(1.5));
  CHECK(target(1, 0) == doctest::Approx(-0.5));

  const SolveReport r = solve_generator(ObjectiveKind::GanCls, pd, pm);
  CHECK_FALSE(r.feasible_closed_form);
  CHECK(std::abs(r.argmin.conditional()(0, 0) - 1.0) <= 1e-3);
  const GridResult grid = grid_oracle(ObjectiveKind::GanCls, pd, pm, 1e-3);
  CHECK(grid.points == 1001);
  CHECK(std::abs(r.value - grid.value) <= 1e-3);
  CHECK(std::abs(r.argmin.conditional()(0, 0) - grid.argmin.conditional()(0, 0)) <= 1e-3);
}

TEST_CASE("grid oracle enumerates the lattice") {
  const JointPMF pd = make_joint_pmf(Table::from_rows({{0.3}, {0.7}}));
  const GridResult g = grid_oracle(ObjectiveKind::ConditionalGan, pd, std::nullopt, 0.5);
  CHECK(g.points == 3);
  CHECK(g.argmin.conditional()(0, 0) == 0.5);

  const JointPMF p3 = make_joint_pmf(Table::from_rows({{0.2}, {0.5}, {0.3}}));
  const GridResult m = grid_oracle(ObjectiveKind::ModifiedGanCls, p3, p3, 0.01);
  CHECK(m.points == 5151);
  for (std::size_t x = 0; x < 3; ++x) CHECK(std::abs(m.argmin.conditional()(x, 0) - p3(x, 0)) <= 0.01);
  CHECK(std::abs(m.value + kLog4) <= 1e-3);
}

TEST_CASE("grid oracle finds 2 p_d - p_mis in the feasible case") {
  const JointPMF pd = make_joint_pmf(Table::from_rows({{0.3}, {0.3}, {0.4}}));
  const JointPMF pm = make_joint_pmf(Table::from_rows({{0.2}, {0.4}, {0.4}}));
  const GridResult g = grid_oracle(ObjectiveKind::GanCls, pd, pm, 0.01);
  const double expected[] = {0.4, 0.2, 0.4};
  for (std::size_t x = 0; x < 3; ++x) CHECK(std::abs(g.argmin.conditional()(x, 0) - expected[x]) <= 0.01 + 1e-12);
}

TEST_CASE("grid oracle rejects bad steps and oversized grids") {
  const JointPMF pd = make_joint_pmf(Table::from_rows({{0.3}, {0.7}}));
  CHECK_THROWS_AS(grid_oracle(ObjectiveKind::ConditionalGan, pd, std::nullopt, 0.3), ConfigError);
  Rng rng(1);
  const JointPMF big = random_joint(8, 3, rng);
  CHECK_THROWS_AS(grid_oracle(ObjectiveKind::ConditionalGan, big, std::nullopt, 0.01), ConfigError);
}

TEST_CASE("solver never does worse than the lattice") {
  Rng rng(44);
  for (auto kind : {ObjectiveKind::GanCls, ObjectiveKind::ModifiedGanCls, ObjectiveKind::ConditionalGan}) {
    for (int i = 0; i < 8; ++i) {
      Instance inst = random_instance(3, 2, MismatchShape::Independent, rng);
      if (!needs_mismatch(kind)) inst.mismatched.reset();
      const SolveReport r = solve_generator(kind, inst.data, inst.mismatched);
      const GridResult g = grid_oracle(kind, inst.data, inst.mismatched, 0.05);
      CHECK(r.value <= g.value + 1e-3);
    }
  }
}

TEST_CASE("original gan matches the outcome marginal") {
  Rng rng(8);
  const JointPMF pd = random_joint(5, 3, rng);
  const SolveReport r = solve_generator(ObjectiveKind::OriginalGan, pd, std::nullopt);
  // Only the mixture over conditions is identified.
  const auto marg = pd.outcome_marginal();
  const auto ph = pd.condition_marginal();
  for (std::size_t x = 0; x < 5; ++x) {
    double mixed = 0.0;
    for (std::size_t h = 0; h < 3; ++h) mixed += r.argmin.conditional()(x, h) * ph[h];
    CHECK(std::abs(mixed - marg[x]) <= 1e-4);
  }
}

TEST_CASE("solver trace is non-increasing and runs are deterministic") {
  Rng rng(10);
  const Instance inst = random_instance(6, 2, MismatchShape::Independent, rng);
  SolveOptions o;
  o.record_trace = true;
  o.seed = 123;
  const SolveReport a = solve_generator(ObjectiveKind::GanCls, inst.data, inst.mismatched, o);
  REQUIRE(a.trace.size() >= 2);
  for (std::size_t k = 1; k < a.trace.size(); ++k) CHECK(a.trace[k] <= a.trace[k - 1]);
  CHECK(a.restart_values.size() == o.restarts);

  const SolveReport b = solve_generator(ObjectiveKind::GanCls, inst.data, inst.mismatched, o);
  CHECK(a.value == b.value);
  CHECK(a.iterations == b.iterations);
  CHECK(a.restart_values == b.restart_values);
  CHECK(a.argmin.conditional() == b.argmin.conditional());
  CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("converged reports have a small projected gradient") {
  Rng rng(13);
  const Instance inst = random_instance(4, 2, MismatchShape::Independent, rng);
  const SolveReport r = solve_generator(ObjectiveKind::ModifiedGanCls, inst.data, inst.mismatched);
  REQUIRE(r.converged);
  const Table grad = generator_gradient(ObjectiveKind::ModifiedGanCls, inst.data, inst.mismatched, r.argmin);
  double norm2 = 0.0;
  for (std::size_t h = 0; h < 2; ++h) {
    std::vector<double> step(4);
    for (std::size_t x = 0; x < 4; ++x) step[x] = r.argmin.conditional()(x, h) - grad(x, h);
    const auto p = project_simplex(step);
    for (std::size_t x = 0; x < 4; ++x) {
      const double d = r.argmin.conditional()(x, h) - p[x];
      norm2 += d * d;
    }
  }
  CHECK(std::sqrt(norm2) <= SolveOptions{}.tol_grad);
}

TEST_CASE("report json carries the documented fields") {
  const JointPMF pd = make_joint_pmf(Table::from_rows({{0.3}, {0.7}}));
  const auto doc = to_json(solve_generator(ObjectiveKind::ConditionalGan, pd, std::nullopt));
  for (const char* f : {"kind", "value", "converged", "iterations", "feasible_closed_form", "argmin", "restart_values"})
    CHECK(doc.contains(f));
}
