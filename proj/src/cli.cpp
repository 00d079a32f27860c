#include "groupmax/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>

#include "CLI11.hpp"

#include "groupmax/cuts.hpp"
#include "groupmax/text.hpp"

namespace groupmax {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  if (!j.is_object()) throw StructuralError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw StructuralError(where + ": unknown key '" + key + "'");
  }
}

std::vector<double> parse_point(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (std::string_view tok : split(text, ',')) {
    const auto v = parse_double(tok);
    if (!v || !std::isfinite(*v)) throw UsageError(what + ": '" + std::string(tok) + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

}  // namespace

json sampler_to_json(const SamplerSpec& s) {
  if (s.law == SamplingLaw::gaussian) {
    return json{{"law", "gaussian"}, {"mean", s.first}, {"variance", s.second}};
  }
  return json{{"law", "uniform"}, {"lo", s.first}, {"hi", s.second}};
}

SamplerSpec sampler_from_json(const json& j, std::size_t dim, const std::string& where) {
  SamplerSpec s;
  s.dim = dim;
  s.law = parse_sampling_law(get_key<std::string>(j, "law", where));
  if (s.law == SamplingLaw::gaussian) {
    reject_unknown_keys(j, {"law", "mean", "variance"}, where);
    s.first = get_key_or<double>(j, "mean", 0.0, where);
    s.second = get_key_or<double>(j, "variance", 1.0, where);
    if (!(s.second > 0.0) || !std::isfinite(s.second)) {
      throw StructuralError(where + ".variance must be positive");
    }
  } else {
    reject_unknown_keys(j, {"law", "lo", "hi"}, where);
    s.first = get_key<double>(j, "lo", where);
    s.second = get_key<double>(j, "hi", where);
    if (!(s.first < s.second)) throw StructuralError(where + ".lo must be below " + where + ".hi");
  }
  return s;
}

ExperimentConfig parse_experiment(const json& j) {
  reject_unknown_keys(j, {"architecture", "case", "training", "evaluation", "output"}, "config");
  ExperimentConfig c;
  c.arch = arch_from_json(get_key<json>(j, "architecture", "config"));

  const json cj = get_key<json>(j, "case", "config");
  reject_unknown_keys(cj, {"function", "dim", "nonconvex_dim", "spd_seed", "sampler", "noise_std"}, "case");
  c.target_case.function = parse_function_id(get_key<std::string>(cj, "function", "case"));
  c.target_case.dim = get_key_or<std::size_t>(cj, "dim", 0, "case");
  c.target_case.nonconvex_dim = get_key_or<std::size_t>(cj, "nonconvex_dim", 0, "case");
  c.target_case.spd_seed = get_key_or<std::uint64_t>(cj, "spd_seed", kDefaultSpdSeed, "case");
  const TargetFunction f = c.target_case.target();
  c.train.sampler = cj.contains("sampler") ? sampler_from_json(cj["sampler"], f.dim, "case.sampler")
                                           : default_sampler(f);
  c.train.noise_std = get_key_or<double>(cj, "noise_std", 0.0, "case");
  if (!(c.train.noise_std >= 0.0) || !std::isfinite(c.train.noise_std)) {
    throw StructuralError("case.noise_std must be >= 0");
  }

  const json tj = get_key_or<json>(j, "training", json::object(), "config");
  reject_unknown_keys(tj, {"learning_rate", "batch_size", "iterations", "beta1", "beta2", "epsilon",
                           "normalize", "normalizer_samples", "trace_every", "seed", "model_seed"},
                      "training");
  TrainConfig& t = c.train;
  t.learning_rate = get_key_or<double>(tj, "learning_rate", t.learning_rate, "training");
  t.batch_size = get_key_or<std::size_t>(tj, "batch_size", t.batch_size, "training");
  t.iterations = get_key_or<std::size_t>(tj, "iterations", t.iterations, "training");
  t.beta1 = get_key_or<double>(tj, "beta1", t.beta1, "training");
  t.beta2 = get_key_or<double>(tj, "beta2", t.beta2, "training");
  t.epsilon = get_key_or<double>(tj, "epsilon", t.epsilon, "training");
  t.normalize = get_key_or<bool>(tj, "normalize", t.normalize, "training");
  t.normalizer_samples = get_key_or<std::size_t>(tj, "normalizer_samples", t.normalizer_samples, "training");
  t.trace_every = get_key_or<std::size_t>(tj, "trace_every", t.trace_every, "training");
  t.seed = get_key_or<std::uint64_t>(tj, "seed", 1, "training");
  c.model_seed = get_key_or<std::uint64_t>(tj, "model_seed", mix_seed(t.seed, 0), "training");
  try {
    t.validate();
  } catch (const StructuralError& e) {
    throw StructuralError(std::string("training: ") + e.what());
  }

  const json ej = get_key_or<json>(j, "evaluation", json::object(), "config");
  reject_unknown_keys(ej, {"samples", "seed"}, "evaluation");
  c.eval_samples = get_key_or<std::size_t>(ej, "samples", c.eval_samples, "evaluation");
  c.eval_seed = get_key_or<std::uint64_t>(ej, "seed", c.eval_seed, "evaluation");
  if (c.eval_samples == 0) throw StructuralError("evaluation.samples must be >= 1");

  const json oj = get_key_or<json>(j, "output", json::object(), "config");
  reject_unknown_keys(oj, {"directory", "model", "loss", "report"}, "output");
  c.output.directory = get_key_or<std::string>(oj, "directory", c.output.directory, "output");
  c.output.model = get_key_or<std::string>(oj, "model", c.output.model, "output");
  c.output.loss = get_key_or<std::string>(oj, "loss", c.output.loss, "output");
  c.output.report = get_key_or<std::string>(oj, "report", c.output.report, "output");

  if (c.arch.kind == ModelKind::partial_groupmax || c.arch.kind == ModelKind::partial_icnn) {
    if (f.convex_dim >= f.dim) {
      throw StructuralError("architecture.kind: " + to_string(c.arch.kind) + " needs a partially convex case, " +
                            to_string(f.id) + " is convex in every input");
    }
  } else if (c.arch.kind != ModelKind::mlp && f.convex_dim != f.dim) {
    throw StructuralError("architecture.kind: " + to_string(c.arch.kind) + " is convex in every input but " +
                          to_string(f.id) + " is only convex in its last " + std::to_string(f.convex_dim));
  }
  try {
    build_model(c.arch, f.dim, f.convex_dim, 0);
  } catch (const std::invalid_argument& e) {
    throw StructuralError(std::string("architecture: ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw StructuralError(path + ": not valid JSON: " + e.what());
  }
  return parse_experiment(j);
}

namespace {

int cmd_train(const std::string& config_path, const std::string& dir_override, std::ostream& out,
              std::ostream& err) {
  ExperimentConfig c = load_experiment(config_path);
  if (!dir_override.empty()) c.output.directory = dir_override;
  const TargetFunction f = c.target_case.target();
  Model model = build_model(c.arch, f.dim, f.convex_dim, c.model_seed);
  const TrainReport rep = fit(model, f.as_fn(), c.train);
  TrainedModel tm{std::move(model), rep.normalizer};
  const double mse = mc_mse(tm, f, c.train.sampler, c.eval_samples, c.eval_seed);

  json report;
  report["function"] = to_string(f.id);
  report["architecture"] = arch_to_json(c.arch);
  report["parameter_count"] = tm.model.parameters().size();
  report["model_seed"] = c.model_seed;
  report["train_seed"] = c.train.seed;
  report["iterations"] = c.train.iterations;
  report["final_batch_loss"] = rep.loss_trace.empty() ? 0.0 : rep.loss_trace.back().second;
  report["sampler"] = sampler_to_json(c.train.sampler);
  report["noise_std"] = c.train.noise_std;
  report["normalized"] = c.train.normalize;
  report["eval_samples"] = c.eval_samples;
  report["eval_seed"] = c.eval_seed;
  report["mc_mse"] = mse;
  report["model_hash"] = model_hash(tm.model.params());

  const std::string model_path = join_path(c.output.directory, c.output.model);
  save_model(tm, model_path);
  write_file_atomic(join_path(c.output.directory, c.output.loss), loss_trace_csv(rep));
  write_file_atomic(join_path(c.output.directory, c.output.report), report.dump(1) + "\n");
  out << "trained " << to_string(c.arch.kind) << " on " << to_string(f.id) << ": test mse "
      << format_double(mse) << " -> " << model_path << '\n';
  err << "wall time " << rep.wall_seconds << " s\n";
  return 0;
}

struct CutsArgs {
  std::string model;
  std::string at;
  bool enumerate = false;
  std::uint64_t cap = kDefaultCutCap;
  std::string conditional;
  std::string out_path;
};

int cmd_cuts(const CutsArgs& a, std::ostream& out, std::ostream& err) {
  const TrainedModel tm = load_model(a.model);
  const Model& m = tm.model;
  const std::size_t offset = m.input_dim() - m.convex_dim();
  const auto to_model_coords = [&](std::vector<double> x, std::size_t first) {
    if (!tm.normalizer) return x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = (x[i] - tm.normalizer->input_mean[first + i]) / tm.normalizer->input_std[first + i];
    }
    return x;
  };
  const auto to_original = [&](std::vector<Cut> cuts) {
    if (tm.normalizer) {
      for (Cut& c : cuts) c = denormalize_cut(c, *tm.normalizer, offset);
    }
    return cuts;
  };

  CutSet set;
  if (!a.at.empty()) {
    const std::vector<double> x = parse_point(a.at, "--at");
    if (x.size() != m.input_dim()) {
      throw UsageError("--at: expected " + std::to_string(m.input_dim()) + " coordinates");
    }
    set.dim = m.convex_dim();
    set.cuts = to_original({active_cut(m, to_model_coords(x, 0))});
    if (m.partial()) set.condition = std::vector<double>(x.begin(), x.begin() + offset);
    set.model_hash = model_hash(m.params());
  } else if (a.enumerate) {
    EnumerationStats stats;
    if (const auto* g = m.get_if<GroupMaxNet>()) {
      set = enumerate_cuts(*g, a.cap, &stats);
    } else if (const auto* ma = m.get_if<MaxAffineNet>()) {
      set = enumerate_cuts(*ma, a.cap, &stats);
    } else {
      throw UsageError("--enumerate needs a groupmax or max_affine model (this is " +
                       to_string(m.kind()) + "); use --at or --conditional");
    }
    set.cuts = to_original(std::move(set.cuts));
    err << "enumerated " << format_double(stats.raw) << " cuts (formula "
        << format_double(stats.formula) << "), " << set.cuts.size() << " distinct\n";
  } else {
    const auto* p = m.get_if<PartialGroupMaxNet>();
    if (!p) throw UsageError("--conditional needs a partial_groupmax model");
    const std::vector<double> xt = parse_point(a.conditional, "--conditional");
    if (xt.size() != offset) {
      throw UsageError("--conditional: expected " + std::to_string(offset) + " coordinates");
    }
    set = enumerate_conditional_cuts(*p, to_model_coords(xt, 0), a.cap);
    set.cuts = to_original(std::move(set.cuts));
    set.condition = xt;
  }
  if (a.out_path.empty()) {
    out << format_cuts(set);
  } else {
    export_cuts(set, a.out_path);
  }
  return 0;
}

int cmd_bench(const std::string& id, const TableOptions& opt, const std::string& dir,
              std::ostream& out) {
  const auto ids = table_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    std::string list;
    for (const auto& s : ids) list += (list.empty() ? "" : ", ") + s;
    throw StructuralError("unknown benchmark id '" + id + "'; valid ids: " + list);
  }
  const TableOutput t = run_table(id, opt);
  write_file_atomic(join_path(dir, id + ".csv"), t.csv);
  write_file_atomic(join_path(dir, id + "_detail.csv"), t.detail_csv);
  write_file_atomic(join_path(dir, id + "_notes.txt"), t.notes);
  if (id[0] == 'T') out << t.csv;
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string function;
  std::string config;
  std::size_t dim = 0;
  std::size_t nonconvex_dim = 0;
  std::string law;
  double first = 0.0;
  double second = 0.0;
  std::size_t samples = 1000000;
  std::uint64_t seed = 12345;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const TrainedModel tm = load_model(a.model);
  TargetFunction f;
  SamplerSpec s;
  std::size_t samples = a.samples;
  std::uint64_t seed = a.seed;
  if (!a.config.empty()) {
    const ExperimentConfig c = load_experiment(a.config);
    f = c.target_case.target();
    s = c.train.sampler;
  } else {
    f = make_target(parse_function_id(a.function), a.dim, a.nonconvex_dim);
    s = default_sampler(f);
    if (!a.law.empty()) {
      s.law = parse_sampling_law(a.law);
      s.first = a.first;
      s.second = a.second;
      s.validate();
    }
  }
  if (tm.model.input_dim() != f.dim) {
    throw StructuralError("model input dimension " + std::to_string(tm.model.input_dim()) +
                          " does not match " + to_string(f.id) + " (" + std::to_string(f.dim) + ")");
  }
  out << format_double(mc_mse(tm, f, s, samples, seed)) << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"GroupMax convex networks: training, cut extraction and benchmarks", "groupmax"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  CLI::App* train = app.add_subcommand("train", "fit a model described by a JSON config");
  train->add_option("config", config_path, "experiment config")->required();
  train->add_option("--output-dir", out_dir, "overrides output.directory");

  CutsArgs ca;
  CLI::App* cuts = app.add_subcommand("cuts", "extract cuts from a saved model");
  cuts->add_option("model", ca.model, "model file")->required();
  auto* at = cuts->add_option("--at", ca.at, "active cut at x (comma separated)");
  auto* en = cuts->add_flag("--enumerate", ca.enumerate, "every cut of the network");
  auto* co = cuts->add_option("--conditional", ca.conditional, "cuts in y at fixed x~ (comma separated)");
  cuts->add_option("--cap", ca.cap, "largest enumeration attempted");
  cuts->add_option("--out", ca.out_path, "cut file (default: stdout)");
  at->excludes(en)->excludes(co);
  en->excludes(co);

  std::string bench_id, bench_dir = "results";
  TableOptions topt;
  topt.verbose = true;
  bool quiet = false;
  std::size_t runs = 0;
  CLI::App* bench = app.add_subcommand("bench", "reproduce a table (T1..T10) or figure (F1..F4)");
  bench->add_option("id", bench_id, "table or figure id")->required();
  bench->add_option("--runs", runs, "runs per case (default 10, 1 for figures)");
  bench->add_option("--scale", topt.scale, "multiplies iterations and runs")->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_dir, "output directory");
  bench->add_flag("--quiet", quiet, "no progress on stderr");

  EvalArgs ea;
  CLI::App* eval = app.add_subcommand("eval", "Monte Carlo test MSE of a saved model");
  eval->add_option("model", ea.model, "model file")->required();
  auto* ec = eval->add_option("--case", ea.function, "function id f1..f10");
  auto* eg = eval->add_option("--config", ea.config, "take function and sampler from a config");
  ec->excludes(eg);
  eval->add_option("--dim", ea.dim, "f8/f9 dimension, f10 convex dimension");
  eval->add_option("--nonconvex-dim", ea.nonconvex_dim, "f10 non-convex dimension");
  eval->add_option("--law", ea.law, "gaussian or uniform");
  eval->add_option("--a", ea.first, "mean or lower bound");
  eval->add_option("--b", ea.second, "variance or upper bound");
  eval->add_option("--samples", ea.samples, "Monte Carlo draws");
  eval->add_option("--seed", ea.seed, "evaluation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(config_path, out_dir, out, err);
    if (*cuts) {
      if (ca.at.empty() && !ca.enumerate && ca.conditional.empty()) {
        throw UsageError("cuts: give one of --at, --enumerate or --conditional");
      }
      return cmd_cuts(ca, out, err);
    }
    if (*bench) {
      if (runs > 0) topt.runs = runs;
      topt.verbose = !quiet;
      return cmd_bench(bench_id, topt, bench_dir, out);
    }
    if (*eval) {
      if (ea.function.empty() && ea.config.empty()) throw UsageError("eval: give --case or --config");
      return cmd_eval(ea, out);
    }
  } catch (const CutOverflowError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace groupmax
