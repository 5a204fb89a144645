#include "gancls/cli.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gancls/dist.hpp"
#include "gancls/eval.hpp"
#include "gancls/fixedpoint.hpp"
#include "gancls/instances.hpp"
#include "gancls/objective.hpp"
#include "gancls/train.hpp"

namespace gancls::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

const json& require(const json& doc, const std::string& field) {
  if (!doc.is_object() || !doc.contains(field)) throw ConfigError("missing field: " + field);
  return doc.at(field);
}

void write_manifest(const Options& opts, std::string_view subcommand, const json& config) {
  fs::create_directories(opts.out);
  json manifest = {{"subcommand", subcommand},
                   {"config_path", opts.config.string()},
                   {"output_dir", opts.out.string()},
                   {"seed", opts.seed ? json(*opts.seed) : json(nullptr)},
                   {"tool_version", kToolVersion},
                   {"config", config}};
  write_json(opts.out / "manifest.json", manifest);
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigurationError;
  } catch (const ValidationError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigurationError;
  } catch (const json::exception& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigurationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

JointPMF pmf_from_json(const json& rows) {
  return JointPMF::from_masses(Table::from_rows(rows.get<std::vector<std::vector<double>>>()));
}

SolveOptions solve_options_from_json(const json& doc, std::optional<std::uint64_t> seed) {
  SolveOptions o;
  if (doc.is_object()) {
    if (doc.contains("max_iters")) o.max_iters = doc.at("max_iters").get<std::size_t>();
    if (doc.contains("tol_value")) o.tol_value = doc.at("tol_value").get<double>();
    if (doc.contains("tol_grad")) o.tol_grad = doc.at("tol_grad").get<double>();
    if (doc.contains("step_size")) o.step_size = doc.at("step_size").get<double>();
    if (doc.contains("restarts")) o.restarts = doc.at("restarts").get<std::size_t>();
    if (doc.contains("seed")) o.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (seed) o.seed = *seed;
  o.validate();
  return o;
}

std::vector<Instance> fixedpoint_instances(const json& cfg, ObjectiveKind kind, std::optional<std::uint64_t> seed) {
  std::vector<Instance> out;
  if (cfg.contains("p_d")) {
    JointPMF data = pmf_from_json(cfg.at("p_d"));
    std::optional<JointPMF> mis;
    if (cfg.contains("p_mis")) {
      mis = pmf_from_json(cfg.at("p_mis"));
    } else if (cfg.contains("mismatch_rule")) {
      const auto& r = cfg.at("mismatch_rule");
      MismatchRule rule = r.is_array() ? MismatchRule(r.get<std::vector<std::size_t>>())
                          : r.get<std::string>() == "swap" ? MismatchRule::swap(data.conditions())
                                                            : MismatchRule::cycle(data.conditions());
      mis = mismatch_joint(data, rule);
    }
    if (needs_mismatch(kind) && !mis) throw ConfigError("missing field: p_mis");
    if (!needs_mismatch(kind)) mis.reset();
    out.push_back({std::move(data), std::move(mis)});
    return out;
  }
  const json& random = require(cfg, "random");
  const auto outcomes = require(random, "outcomes").get<std::size_t>();
  const auto conditions = require(random, "conditions").get<std::size_t>();
  const auto count = random.value("count", std::size_t{1});
  const auto shape = mismatch_shape_from_string(random.value("mismatch", std::string("independent")));
  Rng rng(seed ? *seed : random.value("seed", std::uint64_t{0}));
  for (std::size_t i = 0; i < count; ++i) {
    Instance inst = random_instance(outcomes, conditions, shape, rng);
    if (!needs_mismatch(kind)) inst.mismatched.reset();
    out.push_back(std::move(inst));
  }
  return out;
}

double max_deviation(const SolveReport& report, const JointPMF& data, const std::optional<JointPMF>& mis) {
  const Table target = closed_form_fixed_point(report.kind, data, mis);
  const auto marginal = data.condition_marginal();
  double dev = 0.0;
  for (std::size_t h = 0; h < target.cols(); ++h) {
    if (marginal[h] <= 0.0) continue;
    for (std::size_t x = 0; x < target.rows(); ++x)
      dev = std::max(dev, std::abs(report.argmin.conditional()(x, h) - target(x, h)));
  }
  return dev;
}

SyntheticDataset load_dataset(const json& field, const fs::path& config_path, std::uint64_t seed) {
  if (field.is_string()) {
    fs::path p = field.get<std::string>();
    if (p.is_relative()) p = config_path.parent_path() / p;
    return dataset_from_json(read_json(p), seed);
  }
  return dataset_from_json(field, seed);
}

std::string csv_of(const TrainHistory& history) {
  std::ostringstream os;
  history.write_csv(os);
  return os.str();
}

std::string histogram_csv(const EmpiricalHistogram& h) {
  std::ostringstream os;
  write_histogram_csv(os, h);
  return os.str();
}

}  // namespace

int cmd_fixedpoint(const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const json cfg = read_json(opts.config);
    const ObjectiveKind kind = objective_kind_from_string(require(cfg, "kind").get<std::string>());
    const SolveOptions solve = solve_options_from_json(cfg.value("solver", json::object()), opts.seed);
    const auto instances = fixedpoint_instances(cfg, kind, opts.seed);
    write_manifest(opts, "fixedpoint", cfg);

    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      const SolveReport report = solve_generator(kind, inst.data, inst.mismatched, solve);
      const double dev = max_deviation(report, inst.data, inst.mismatched);
      json doc = to_json(report);
      doc["max_deviation"] = dev;
      doc["p_d"] = inst.data.masses().to_rows();
      if (inst.mismatched) doc["p_mis"] = inst.mismatched->masses().to_rows();
      write_json(opts.out / fmt::format("solve_report_{}.json", i), doc);
      out << fmt::format("kind={} value={:.12f} feasible={} max_deviation={:.3e} converged={}\n",
                         to_string(kind), report.value, report.feasible_closed_form, dev, report.converged);
    }
    return int{kSuccess};
  });
}

int cmd_train(const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    json cfg = read_json(opts.config);
    if (opts.seed) cfg["seed"] = *opts.seed;
    const TrainConfig run = train_config_from_json(cfg);
    const SyntheticDataset ds = load_dataset(require(cfg, "dataset"), opts.config, run.seed);
    write_manifest(opts, "train", cfg);

    std::optional<TrainResult> result;
    try {
      result = train(ds, run);
    } catch (const TrainingError& e) {
      err << "training aborted: " << e.what() << '\n';
      return int{kRuntimeFailure};
    }
    write_text(opts.out / "history.csv", csv_of(result->history));
    write_json(opts.out / "generator.json", to_json(result->generator));
    write_json(opts.out / "discriminator.json", to_json(result->discriminator));

    const AlgorithmResult eval = evaluate_run(ds, run, std::move(*result));
    json doc = {{"algorithm", to_string(run.algorithm)},
                {"seed", run.seed},
                {"tv", eval.tv},
                {"ks", eval.ks},
                {"d_output_densities",
                 {{"matched", to_json(eval.densities.matched)},
                  {"mismatched", to_json(eval.densities.mismatched)},
                  {"generated", to_json(eval.densities.generated)}}}};
    write_json(opts.out / "eval.json", doc);
    write_text(opts.out / "d_matched.csv", histogram_csv(eval.densities.matched));
    write_text(opts.out / "d_mismatched.csv", histogram_csv(eval.densities.mismatched));
    write_text(opts.out / "d_generated.csv", histogram_csv(eval.densities.generated));

    out << fmt::format("algorithm={} N={} seed={}", to_string(run.algorithm), run.iterations, run.seed);
    for (std::size_t h = 0; h < eval.tv.size(); ++h) out << fmt::format(" tv_class_{}={:.4f}", h, eval.tv[h]);
    out << '\n';
    return int{kSuccess};
  });
}

static std::optional<std::vector<GaussianMixture>> compare_override(const json& cfg, const SyntheticDataset& ds) {
  if (!cfg.contains("override") || cfg.at("override").is_null()) return ds.mismatch_override;
  const json& o = cfg.at("override");
  if (o.is_string()) {
    if (o.get<std::string>() == "identity") return ds.classes;
    throw ConfigError("unknown override: " + o.get<std::string>());
  }
  std::vector<GaussianMixture> samplers;
  for (const auto& m : o) samplers.push_back(mixture_from_json(m));
  return samplers;
}

int cmd_compare(const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const json cfg = read_json(opts.config);
    json run_doc = require(cfg, "run");
    if (!run_doc.contains("algorithm")) run_doc["algorithm"] = "modified";
    require(run_doc, "N");
    std::vector<std::uint64_t> seeds;
    if (opts.seed) {
      seeds = {*opts.seed};
    } else if (cfg.contains("seeds")) {
      seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
      seeds = {run_doc.value("seed", std::uint64_t{0})};
    }
    const TrainConfig base_run = train_config_from_json(run_doc);
    const SyntheticDataset ds = load_dataset(require(cfg, "dataset"), opts.config, seeds.front());
    const auto override_sampler = compare_override(cfg, ds);
    write_manifest(opts, "compare", cfg);

    json reports = json::array();
    std::string summary = "seed,class,tv_gancls,tv_modified\n";
    out << fmt::format("{:>6} {:>5} {:>12} {:>12}\n", "seed", "class", "gancls", "modified");
    for (std::uint64_t seed : seeds) {
      TrainConfig run = base_run;
      run.seed = seed;
      const ExperimentReport report = mismatch_experiment(ds, override_sampler, run);
      reports.push_back(to_json(report));
      const auto& g = report.result(Algorithm::GanCls);
      const auto& m = report.result(Algorithm::ModifiedGanCls);
      write_text(opts.out / fmt::format("history_gancls_seed{}.csv", seed), csv_of(g.history));
      write_text(opts.out / fmt::format("history_modified_seed{}.csv", seed), csv_of(m.history));
      for (std::size_t h = 0; h < g.tv.size(); ++h) {
        summary += fmt::format("{},{},{:.17g},{:.17g}\n", seed, h, g.tv[h], m.tv[h]);
        out << fmt::format("{:>6} {:>5} {:>12.4f} {:>12.4f}\n", seed, h, g.tv[h], m.tv[h]);
      }
    }
    write_json(opts.out / "report.json", {{"tool_version", kToolVersion}, {"experiments", reports}});
    write_text(opts.out / "summary.csv", summary);
    return int{kSuccess};
  });
}

}  // namespace gancls::cli
