#include "gancls/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

namespace gancls {

void SolveOptions::validate() const {
  if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
  if (!(tol_value > 0.0) || !(tol_grad > 0.0)) throw ValidationError("tolerances must be positive");
  if (!(step_size > 0.0)) throw ValidationError("step_size must be positive");
  if (restarts < 1) throw ValidationError("restarts must be at least 1");
}

nlohmann::json to_json(const SolveReport& report) {
  return {
      {"kind", to_string(report.kind)},
      {"value", report.value},
      {"converged", report.converged},
      {"iterations", report.iterations},
      {"feasible_closed_form", report.feasible_closed_form},
      {"argmin", report.argmin.conditional().to_rows()},
      {"restart_values", report.restart_values},
  };
}

Table closed_form_fixed_point(ObjectiveKind kind, const JointPMF& data,
                              const std::optional<JointPMF>& mismatched) {
  const std::size_t X = data.outcomes();
  const std::size_t H = data.conditions();
  const std::vector<double> marginal = data.condition_marginal();
  Table target(X, H, 1.0 / static_cast<double>(X));
  switch (kind) {
    case ObjectiveKind::OriginalGan: {
      const std::vector<double> px = data.outcome_marginal();
      for (std::size_t h = 0; h < H; ++h) target.set_column(h, px);
      break;
    }
    case ObjectiveKind::ConditionalGan:
    case ObjectiveKind::ModifiedGanCls:
      for (std::size_t h = 0; h < H; ++h)
        if (marginal[h] > 0.0) target.set_column(h, data.conditional(h));
      break;
    case ObjectiveKind::GanCls:
      if (!mismatched) throw ValidationError("gancls requires a mismatched distribution");
      for (std::size_t h = 0; h < H; ++h) {
        if (marginal[h] <= 0.0) continue;
        for (std::size_t x = 0; x < X; ++x)
          target(x, h) = (2.0 * data(x, h) - (*mismatched)(x, h)) / marginal[h];
      }
      break;
  }
  return target;
}

bool is_feasible_pmf(const Table& conditionals) {
  for (double v : conditionals.flat())
    if (v < -kMassTolerance) return false;
  for (std::size_t h = 0; h < conditionals.cols(); ++h)
    if (std::abs(conditionals.column_sum(h) - 1.0) > 1e-9) return false;
  return true;
}

Table generator_gradient(ObjectiveKind kind, const JointPMF& data,
                         const std::optional<JointPMF>& mismatched,
                         const GeneratorPMF& generator) {
  const ObjectiveTerms t = objective_terms(kind, data, mismatched, generator);
  const auto& marginal = generator.condition_marginal();
  const bool collapsed = kind == ObjectiveKind::OriginalGan;
  // dV/dfake = log(fake / (real + fake)) = log(1 - D*); the limit is 0 when
  // real = 0, and the clamp floor stands in for -inf when fake = 0.
  Table slope(t.real.rows(), t.real.cols());
  for (std::size_t x = 0; x < slope.rows(); ++x)
    for (std::size_t c = 0; c < slope.cols(); ++c) {
      const double r = t.real(x, c);
      const double f = t.fake(x, c);
      if (r <= 0.0) {
        slope(x, c) = 0.0;
      } else if (f <= 0.0) {
        slope(x, c) = std::log(kDiscriminatorClamp);
      } else {
        slope(x, c) = std::log(f / (r + f));
      }
    }
  Table grad(generator.outcomes(), generator.conditions());
  for (std::size_t x = 0; x < grad.rows(); ++x)
    for (std::size_t h = 0; h < grad.cols(); ++h)
      grad(x, h) = t.generator_slope * marginal[h] * slope(x, collapsed ? 0 : h);
  return grad;
}

std::vector<double> project_simplex(std::span<const double> v) {
  if (v.empty()) return {};
  for (double e : v)
    if (!std::isfinite(e)) throw ValidationError("project_simplex: non-finite entry");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

namespace {

constexpr double kArmijo = 1e-4;
constexpr std::size_t kStallWindow = 25;
constexpr int kMaxHalvings = 80;
constexpr double kValueResolution = 1e-14;
constexpr std::size_t kPolishIters = 200;

Table project_columns(const Table& t) {
  Table out(t.rows(), t.cols());
  for (std::size_t h = 0; h < t.cols(); ++h) out.set_column(h, project_simplex(t.column(h)));
  return out;
}

Table step_and_project(const Table& x, const Table& g, double t) {
  Table trial = x;
  auto tf = trial.flat();
  auto gf = g.flat();
  for (std::size_t i = 0; i < tf.size(); ++i) tf[i] -= t * gf[i];
  return project_columns(trial);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double projected_gradient_norm(const Table& x, const Table& g) {
  const Table p = step_and_project(x, g, 1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.flat()[i] - p.flat()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Rounds tiny drift so that projected columns pass the generator invariant.
GeneratorPMF as_generator(Table cond, const std::vector<double>& marginal) {
  for (std::size_t h = 0; h < cond.cols(); ++h) {
    const double s = cond.column_sum(h);
    for (std::size_t x = 0; x < cond.rows(); ++x) cond(x, h) /= s;
  }
  return GeneratorPMF(std::move(cond), marginal);
}

// Diagonal of the Hessian of V(D*_G, G) in the generator conditionals:
// d2V/dfake2 = real / (fake (real + fake)), times (slope p(h))^2.
Table curvature(ObjectiveKind kind, const JointPMF& data, const std::optional<JointPMF>& mismatched,
                const GeneratorPMF& generator) {
  const ObjectiveTerms t = objective_terms(kind, data, mismatched, generator);
  const auto& marginal = generator.condition_marginal();
  const bool collapsed = kind == ObjectiveKind::OriginalGan;
  Table out(generator.outcomes(), generator.conditions());
  for (std::size_t x = 0; x < out.rows(); ++x)
    for (std::size_t h = 0; h < out.cols(); ++h) {
      const double r = t.real(x, collapsed ? 0 : h);
      const double f = std::max(t.fake(x, collapsed ? 0 : h), kDiscriminatorClamp);
      const double w = t.generator_slope * marginal[h];
      out(x, h) = r > 0.0 ? w * w * r / (f * (r + f)) : 0.0;
    }
  return out;
}

// argmin over the simplex of g.(y - x) + 1/2 sum w_i (y_i - x_i)^2, i.e.
// y_i = max(0, x_i - (g_i - lambda) / w_i) with lambda fixing the sum.
std::vector<double> scaled_projection(std::span<const double> x, std::span<const double> g,
                                      std::span<const double> w) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::vector<double> knot(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
    knot[i] = g[i] - w[i] * x[i];
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return knot[a] < knot[b]; });
  double lambda = 0.0;
  double inv_sum = 0.0;
  double knot_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    inv_sum += 1.0 / w[i];
    knot_sum += knot[i] / w[i];
    lambda = (1.0 + knot_sum) / inv_sum;
    if (k + 1 == n || lambda <= knot[order[k + 1]]) break;
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = std::max(0.0, (lambda - knot[i]) / w[i]);
  return y;
}

// Scaled step target for every column; columns without curvature stay put.
Table newton_target(const Table& x, const Table& g, const Table& hess) {
  Table out = x;
  for (std::size_t h = 0; h < x.cols(); ++h) {
    auto w = hess.column(h);
    const double top = *std::max_element(w.begin(), w.end());
    if (!(top > 0.0)) continue;
    for (double& e : w) e = std::max(e, 1e-12 * top);
    out.set_column(h, scaled_projection(x.column(h), g.column(h), w));
  }
  return out;
}

struct RestartResult {
  GeneratorPMF generator;
  double value;
  std::size_t iterations;
  bool converged;
  std::vector<double> trace;
};

RestartResult descend(ObjectiveKind kind, const JointPMF& data,
                      const std::optional<JointPMF>& mismatched, const SolveOptions& opts,
                      GeneratorPMF start) {
  const std::vector<double> marginal = start.condition_marginal();
  GeneratorPMF current = std::move(start);
  double v = value_at_optimal_d(kind, data, mismatched, current);
  Table g = generator_gradient(kind, data, mismatched, current);

  RestartResult out{current, v, 0, false, {}};
  if (opts.record_trace) out.trace.push_back(v);

  Table prev_x;
  Table prev_g;
  std::size_t flat_steps = 0;
  double window_pg = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= opts.max_iters; ++it) {
    const Table& x = current.conditional();
    if (projected_gradient_norm(x, g) <= opts.tol_grad) {
      out.converged = true;
      break;
    }
    double t = opts.step_size;
    if (prev_x.size() > 0) {
      double ss = 0.0;
      double sy = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = x.flat()[i] - prev_x.flat()[i];
        const double y = g.flat()[i] - prev_g.flat()[i];
        ss += s * s;
        sy += s * y;
      }
      if (sy > 0.0 && ss > 0.0) t = std::clamp(ss / sy, 1e-8, 1e8);
    }

    bool accepted = false;
    GeneratorPMF next = current;
    double v_next = v;
    for (int halving = 0; halving < kMaxHalvings; ++halving, t *= 0.5) {
      Table trial = step_and_project(x, g, t);
      Table diff = trial;
      for (std::size_t i = 0; i < diff.size(); ++i) diff.flat()[i] -= x.flat()[i];
      const double predicted = dot(g.flat(), diff.flat());
      next = as_generator(std::move(trial), marginal);
      v_next = value_at_optimal_d(kind, data, mismatched, next);
      if (v_next <= v + kArmijo * predicted) {
        accepted = true;
        break;
      }
      // Below the resolution of the objective, fall back to progress in the
      // projected gradient; rounding noise in the value is not counted.
      const double floor = kValueResolution * (1.0 + std::abs(v));
      if (-predicted <= floor && v_next <= v + floor &&
          projected_gradient_norm(next.conditional(), generator_gradient(kind, data, mismatched, next)) <
              projected_gradient_norm(x, g)) {
        v_next = std::min(v, v_next);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    prev_x = x;
    prev_g = g;
    const double change = v - v_next;
    current = std::move(next);
    v = v_next;
    g = generator_gradient(kind, data, mismatched, current);
    out.iterations = it;
    if (opts.record_trace) out.trace.push_back(v);

    // Stalled: a full window of flat values without halving the projected gradient.
    const double pg = projected_gradient_norm(current.conditional(), g);
    if (change > opts.tol_value * (1.0 + std::abs(v))) {
      flat_steps = 0;
    } else if (flat_steps++ == 0) {
      window_pg = pg;
    }
    if (flat_steps >= kStallWindow) {
      if (pg < 0.5 * window_pg) {
        flat_steps = 0;
        continue;
      }
      out.converged = pg <= opts.tol_grad;
      break;
    }
  }
  // Diagonal Newton polish.
  for (std::size_t it = 0; !out.converged && it < kPolishIters; ++it) {
    const Table& x = current.conditional();
    if (projected_gradient_norm(x, g) <= opts.tol_grad) {
      out.converged = true;
      break;
    }
    const Table target = newton_target(x, g, curvature(kind, data, mismatched, current));
    Table dir = target;
    for (std::size_t i = 0; i < dir.size(); ++i) dir.flat()[i] -= x.flat()[i];
    const double slope = dot(g.flat(), dir.flat());
    if (!(slope < 0.0)) break;
    bool accepted = false;
    GeneratorPMF next = current;
    double v_next = v;
    double t = 1.0;
    for (int halving = 0; halving < kMaxHalvings; ++halving, t *= 0.5) {
      Table trial = x;
      for (std::size_t i = 0; i < trial.size(); ++i) trial.flat()[i] += t * dir.flat()[i];
      next = as_generator(std::move(trial), marginal);
      v_next = value_at_optimal_d(kind, data, mismatched, next);
      if (v_next <= v + kArmijo * t * slope) {
        accepted = true;
        break;
      }
      const double floor = kValueResolution * (1.0 + std::abs(v));
      if (-t * slope <= floor && v_next <= v + floor &&
          projected_gradient_norm(next.conditional(), generator_gradient(kind, data, mismatched, next)) <
              projected_gradient_norm(x, g)) {
        v_next = std::min(v, v_next);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    current = std::move(next);
    v = v_next;
    g = generator_gradient(kind, data, mismatched, current);
    ++out.iterations;
    if (opts.record_trace) out.trace.push_back(v);
  }
  if (!out.converged && projected_gradient_norm(current.conditional(), g) <= opts.tol_grad) {
    out.converged = true;
  }
  out.generator = std::move(current);
  out.value = v;
  return out;
}

GeneratorPMF dirichlet_start(const JointPMF& data, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  Table cond(data.outcomes(), data.conditions());
  for (std::size_t h = 0; h < cond.cols(); ++h) {
    double total = 0.0;
    for (std::size_t x = 0; x < cond.rows(); ++x) {
      cond(x, h) = expo(rng);
      total += cond(x, h);
    }
    for (std::size_t x = 0; x < cond.rows(); ++x) cond(x, h) /= total;
  }
  return as_generator(std::move(cond), data.condition_marginal());
}

}  // namespace

SolveReport solve_generator(ObjectiveKind kind, const JointPMF& data,
                            const std::optional<JointPMF>& mismatched, const SolveOptions& opts) {
  opts.validate();
  // Validates dimensions and the mismatched-distribution requirement up front.
  objective_terms(kind, data, mismatched, GeneratorPMF::uniform(data));

  std::optional<RestartResult> best;
  std::vector<double> restart_values;
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    GeneratorPMF start = GeneratorPMF::uniform(data);
    if (r > 0) {
      std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                        static_cast<std::uint32_t>(r)};
      Rng rng(seq);
      start = dirichlet_start(data, rng);
    }
    RestartResult result = descend(kind, data, mismatched, opts, std::move(start));
    restart_values.push_back(result.value);
    if (!best || result.value < best->value) best = std::move(result);
  }

  const Table closed = closed_form_fixed_point(kind, data, mismatched);
  return SolveReport{kind,
                     std::move(best->generator),
                     best->value,
                     best->iterations,
                     best->converged,
                     is_feasible_pmf(closed),
                     std::move(restart_values),
                     std::move(best->trace)};
}

namespace {

double binomial(std::size_t n, std::size_t k) {
  double out = 1.0;
  for (std::size_t i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return out;
}

// Advances a composition of `total` into parts.size() parts; false when done.
bool next_composition(std::vector<std::size_t>& parts, std::size_t total) {
  const std::size_t n = parts.size();
  if (n < 2) return false;
  // Find the rightmost non-last position that can take one unit from the tail.
  std::size_t tail = parts[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    if (tail > 0) {
      ++parts[i];
      std::size_t used = 0;
      for (std::size_t j = 0; j <= i; ++j) used += parts[j];
      for (std::size_t j = i + 1; j < n; ++j) parts[j] = 0;
      parts[n - 1] = total - used;
      return true;
    }
    tail += parts[i];
  }
  return false;
}

}  // namespace

GridResult grid_oracle(ObjectiveKind kind, const JointPMF& data,
                       const std::optional<JointPMF>& mismatched, double step) {
  if (!(step > 0.0) || step > 1.0) throw ConfigError("grid step must lie in (0, 1]");
  const double k_real = 1.0 / step;
  const auto K = static_cast<std::size_t>(std::llround(k_real));
  if (std::abs(k_real - static_cast<double>(K)) > 1e-6) {
    throw ConfigError("grid step must divide 1");
  }
  const std::size_t X = data.outcomes();
  const std::size_t H = data.conditions();
  const double per_column = binomial(K + X - 1, X - 1);
  const double points = std::pow(per_column, static_cast<double>(H));
  if (points > kMaxGridPoints) {
    throw ConfigError("grid too large: " + std::to_string(points) + " points");
  }
  objective_terms(kind, data, mismatched, GeneratorPMF::uniform(data));

  const std::vector<double> marginal = data.condition_marginal();
  std::vector<std::vector<std::size_t>> parts(H, std::vector<std::size_t>(X, 0));
  for (auto& p : parts) p[X - 1] = K;

  GridResult best{std::numeric_limits<double>::infinity(), GeneratorPMF::uniform(data), 0};
  Table cond(X, H);
  for (;;) {
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t x = 0; x < X; ++x)
        cond(x, h) = static_cast<double>(parts[h][x]) / static_cast<double>(K);
    GeneratorPMF g(cond, marginal);
    const double v = value_at_optimal_d(kind, data, mismatched, g);
    ++best.points;
    if (v < best.value) {
      best.value = v;
      best.argmin = std::move(g);
    }
    // Odometer over the per-column compositions.
    std::size_t h = 0;
    while (h < H && !next_composition(parts[h], K)) {
      std::fill(parts[h].begin(), parts[h].end(), 0);
      parts[h][X - 1] = K;
      ++h;
    }
    if (h == H) break;
  }
  return best;
}

}  // namespace gancls
