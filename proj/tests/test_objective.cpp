#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "gancls/instances.hpp"
#include "gancls/objective.hpp"
#include "oracles.hpp"

using namespace gancls;

namespace {

const double kLog4 = std::log(4.0);

oracle::Grid grid_of(const Table& t) {
  oracle::Grid g(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t x = 0; x < t.rows(); ++x)
    for (std::size_t h = 0; h < t.cols(); ++h) g[x][h] = t(x, h);
  return g;
}

GeneratorPMF random_generator(const JointPMF& data, Rng& rng) {
  const JointPMF draw = random_joint(data.outcomes(), data.conditions(), rng);
  Table cond(data.outcomes(), data.conditions());
  for (std::size_t h = 0; h < data.conditions(); ++h) {
    const auto col = draw.conditional(h);
    for (std::size_t x = 0; x < data.outcomes(); ++x) cond(x, h) = col[x];
  }
  return GeneratorPMF(cond, data.condition_marginal());
}

DiscriminatorTable random_d(std::size_t X, std::size_t H, Rng& rng) {
  std::uniform_real_distribution<double> u(0.01, 0.99);
  Table t(X, H);
  for (double& v : t.flat()) v = u(rng);
  return DiscriminatorTable(t);
}

}  // namespace

TEST_CASE("value with uniform inputs and D = 1/2 is -log 4") {
  const JointPMF u = make_joint_pmf(Table::from_rows({{1, 1}, {1, 1}, {1, 1}}));
  const GeneratorPMF g = GeneratorPMF::uniform(u);
  const DiscriminatorTable half(3, 2, 0.5);
  CHECK(value(ObjectiveKind::GanCls, u, u, g, half) == doctest::Approx(-kLog4).epsilon(1e-15));
  CHECK(value(ObjectiveKind::ModifiedGanCls, u, u, g, half) == doctest::Approx(-kLog4).epsilon(1e-15));
  CHECK(value(ObjectiveKind::ConditionalGan, u, std::nullopt, g, half) == doctest::Approx(-kLog4).epsilon(1e-15));
}

TEST_CASE("value matches an independent summation") {
  Rng rng(21);
  for (int i = 0; i < 20; ++i) {
    const JointPMF pd = random_joint(4, 2, rng);
    const JointPMF pm = random_joint(4, 2, rng);
    const GeneratorPMF g = random_generator(pd, rng);
    const DiscriminatorTable d = random_d(4, 2, rng);
    const auto gd = grid_of(pd.masses()), gm = grid_of(pm.masses()), gg = grid_of(g.joint()), dd = grid_of(d.values());
    CHECK(std::abs(value(ObjectiveKind::GanCls, pd, pm, g, d) - oracle::gancls_value(gd, gm, gg, dd)) <= 1e-12);
    CHECK(std::abs(value(ObjectiveKind::ModifiedGanCls, pd, pm, g, d) - oracle::modified_value(gd, gm, gg, dd)) <=
          1e-12);
  }
}

TEST_CASE("value rejects missing mismatch and dimension mismatches") {
  const JointPMF a = make_joint_pmf(Table::from_rows({{1, 1}, {1, 1}}));
  const JointPMF b = make_joint_pmf(Table::from_rows({{1, 1}, {1, 1}, {1, 1}}));
  const GeneratorPMF g = GeneratorPMF::uniform(a);
  const DiscriminatorTable half(2, 2, 0.5);
  CHECK_THROWS_AS(value(ObjectiveKind::GanCls, a, std::nullopt, g, half), ValidationError);
  CHECK_THROWS_AS(value(ObjectiveKind::ModifiedGanCls, a, b, g, half), ValidationError);
  CHECK_THROWS_AS(value(ObjectiveKind::ConditionalGan, a, std::nullopt, g, DiscriminatorTable(3, 2, 0.5)),
                  ValidationError);
  CHECK_THROWS_AS(value(ObjectiveKind::ConditionalGan, b, std::nullopt, g, DiscriminatorTable(3, 2, 0.5)),
                  ValidationError);
}

TEST_CASE("discriminator tables are clamped") {
  const DiscriminatorTable d(Table::from_rows({{0.0, 1.0}}));
  CHECK(d(0, 0) == kDiscriminatorClamp);
  CHECK(d(0, 1) == 1.0 - kDiscriminatorClamp);
  CHECK_THROWS_AS(DiscriminatorTable(Table::from_rows({{std::nan("")}})), ValidationError);
}

TEST_CASE("optimal discriminator closed forms") {
  // Single GanCls cell p_d = 0.5, p_mis = 0.3, p_g = 0.1 embedded in a 3-outcome column.
  const JointPMF pd = make_joint_pmf(Table::from_rows({{0.5}, {0.5}, {0.0}}));
  const JointPMF pm = make_joint_pmf(Table::from_rows({{0.3}, {0.0}, {0.7}}));
  const GeneratorPMF g(Table::from_rows({{0.1}, {0.0}, {0.9}}), {1.0});
  const DiscriminatorTable d = optimal_discriminator(ObjectiveKind::GanCls, pd, pm, g);
  CHECK(d(0, 0) == doctest::Approx(0.5 / 0.7).epsilon(1e-15));

  const DiscriminatorTable cg = optimal_discriminator(ObjectiveKind::ConditionalGan, pd, std::nullopt, g);
  CHECK(cg(0, 0) == doctest::Approx(0.5 / 0.6).epsilon(1e-15));
  CHECK(cg(1, 0) == 1.0 - kDiscriminatorClamp);
}

TEST_CASE("modified optimum is 1/2 when the generator matches the data") {
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    const Instance inst = random_instance(5, 3, MismatchShape::Independent, rng);
    const DiscriminatorTable d = optimal_discriminator(ObjectiveKind::ModifiedGanCls, inst.data, inst.mismatched,
                                                       GeneratorPMF::matching(inst.data));
    for (double v : d.values().flat()) CHECK(std::abs(v - 0.5) <= 1e-15);
  }
}

TEST_CASE("optimal discriminator sets empty cells to 1/2") {
  const JointPMF pd = make_joint_pmf(Table::from_rows({{1.0}, {0.0}}));
  const GeneratorPMF g(Table::from_rows({{1.0}, {0.0}}), {1.0});
  const DiscriminatorTable d = optimal_discriminator(ObjectiveKind::ConditionalGan, pd, std::nullopt, g);
  CHECK(d(1, 0) == 0.5);
}

TEST_CASE("optimal discriminator agrees with per-cell ternary search") {
  Rng rng(77);
  for (auto kind : {ObjectiveKind::GanCls, ObjectiveKind::ModifiedGanCls, ObjectiveKind::ConditionalGan}) {
    for (int i = 0; i < 10; ++i) {
      const JointPMF pd = random_joint(8, 3, rng);
      const JointPMF pm = random_joint(8, 3, rng);
      const GeneratorPMF g = random_generator(pd, rng);
      std::optional<JointPMF> mis;
      if (needs_mismatch(kind)) mis = pm;
      const DiscriminatorTable d = optimal_discriminator(kind, pd, mis, g);
      const Table gj = g.joint();
      for (std::size_t x = 0; x < 8; ++x)
        for (std::size_t h = 0; h < 3; ++h) {
          double a = pd(x, h), b = gj(x, h);
          if (kind == ObjectiveKind::GanCls) b = 0.5 * gj(x, h) + 0.5 * pm(x, h);
          if (kind == ObjectiveKind::ModifiedGanCls) {
            a = 0.5 * (pd(x, h) + pm(x, h));
            b = 0.5 * (gj(x, h) + pm(x, h));
          }
          CHECK(std::abs(d(x, h) - oracle::ternary_argmax(a, b)) <= 1e-6);
        }
    }
  }
}

TEST_CASE("optimal discriminator is a maximizer") {
  Rng rng(12);
  std::uniform_real_distribution<double> delta(-1e-3, 1e-3);
  for (auto kind : {ObjectiveKind::GanCls, ObjectiveKind::ModifiedGanCls}) {
    for (int i = 0; i < 20; ++i) {
      const Instance inst = random_instance(6, 2, MismatchShape::Independent, rng);
      const GeneratorPMF g = random_generator(inst.data, rng);
      const DiscriminatorTable best = optimal_discriminator(kind, inst.data, inst.mismatched, g);
      const double v0 = value(kind, inst.data, inst.mismatched, g, best);
      Table perturbed = best.values();
      for (double& v : perturbed.flat()) v += delta(rng);
      const double v1 = value(kind, inst.data, inst.mismatched, g, DiscriminatorTable(perturbed));
      CHECK(v1 <= v0 + 1e-12);
    }
  }
}

TEST_CASE("kl examples and errors") {
  const std::vector<double> u = {0.25, 0.25, 0.25, 0.25};
  CHECK(kl(u, u) == 0.0);
  const std::vector<double> p = {1.0, 0.0}, q = {0.5, 0.5};
  CHECK(kl(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(std::isinf(kl(q, p)));
  CHECK_THROWS_AS(kl(u, q), ValidationError);
}

TEST_CASE("kl matches the entropy decomposition") {
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_joint(6, 1, rng).conditional(0);
    const auto q = random_joint(6, 1, rng).conditional(0);
    CHECK(std::abs(kl(p, q) - oracle::kl_by_entropy(p, q)) <= 1e-12);
  }
}

TEST_CASE("jsd examples, symmetry and range") {
  const std::vector<double> a = {0.3, 0.7}, disjoint1 = {1.0, 0.0, 0.0}, disjoint2 = {0.0, 0.5, 0.5};
  CHECK(jsd(a, a) == 0.0);
  CHECK(jsd(disjoint1, disjoint2) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));

  const std::vector<double> p = {0.8, 0.2}, q = {0.2, 0.8};
  // Two-term evaluation with m = (0.5, 0.5).
  const double direct = 0.5 * (0.8 * std::log(0.8 / 0.5) + 0.2 * std::log(0.2 / 0.5)) +
                        0.5 * (0.2 * std::log(0.2 / 0.5) + 0.8 * std::log(0.8 / 0.5));
  CHECK(std::abs(jsd(p, q) - direct) <= 1e-15);

  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto x = random_joint(7, 1, rng).conditional(0);
    const auto y = random_joint(7, 1, rng).conditional(0);
    const double j = jsd(x, y);
    CHECK(j == jsd(y, x));
    CHECK(j >= 0.0);
    CHECK(j <= std::numbers::ln2);
    CHECK(std::abs(j - oracle::jsd_by_entropy(x, y)) <= 1e-12);
  }
  CHECK_THROWS_AS(jsd(p, disjoint1), ValidationError);
}

TEST_CASE("value at optimal d examples") {
  Rng rng(9);
  const Instance inst = random_instance(5, 2, MismatchShape::Independent, rng);
  const GeneratorPMF match = GeneratorPMF::matching(inst.data);
  CHECK(std::abs(value_at_optimal_d(ObjectiveKind::ModifiedGanCls, inst.data, inst.mismatched, match) + kLog4) <=
        1e-12);
  CHECK(std::abs(value_at_optimal_d(ObjectiveKind::GanCls, inst.data, inst.data, match) + kLog4) <= 1e-12);
}

TEST_CASE("value at optimal d equals value of the optimal discriminator") {
  Rng rng(55);
  for (auto kind : {ObjectiveKind::GanCls, ObjectiveKind::ModifiedGanCls, ObjectiveKind::ConditionalGan,
                    ObjectiveKind::OriginalGan}) {
    for (int i = 0; i < 25; ++i) {
      const Instance inst = random_instance(6, 3, MismatchShape::Independent, rng);
      std::optional<JointPMF> mis;
      if (needs_mismatch(kind)) mis = inst.mismatched;
      const GeneratorPMF g = random_generator(inst.data, rng);
      const double a = value_at_optimal_d(kind, inst.data, mis, g);
      const double b = value(kind, inst.data, mis, g, optimal_discriminator(kind, inst.data, mis, g));
      CHECK(std::abs(a - b) <= 1e-10);
    }
  }
}

TEST_CASE("modified value at optimal d is bounded below by -log 4") {
  Rng rng(101);
  for (int i = 0; i < 200; ++i) {
    const auto shape = static_cast<MismatchShape>(i % 5);
    const Instance inst = random_instance(2 + i % 7, 2 + i % 3, shape, rng);
    const GeneratorPMF g = random_generator(inst.data, rng);
    CHECK(value_at_optimal_d(ObjectiveKind::ModifiedGanCls, inst.data, inst.mismatched, g) >= -kLog4 - 1e-12);
  }
}

TEST_CASE("objective kind names round trip") {
  for (auto kind : {ObjectiveKind::OriginalGan, ObjectiveKind::ConditionalGan, ObjectiveKind::GanCls,
                    ObjectiveKind::ModifiedGanCls})
    CHECK(objective_kind_from_string(to_string(kind)) == kind);
  CHECK_THROWS(objective_kind_from_string("wgan"));
}
