#include "groupmax/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "groupmax/cuts.hpp"
#include "groupmax/text.hpp"

namespace groupmax {

std::string to_string(FunctionId id) { return "f" + std::to_string(static_cast<int>(id)); }

FunctionId parse_function_id(const std::string& name) {
  for (int i = 1; i <= 10; ++i) {
    if (name == "f" + std::to_string(i)) return static_cast<FunctionId>(i);
  }
  throw StructuralError("unknown function id '" + name + "' (expected f1..f10)");
}

RealMatrix make_spd(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ShapeError("make_spd: dimension must be >= 1");
  Rng rng(seed);
  RealMatrix b(dim, dim);
  for (double& v : b.entries()) v = rng.normal();
  RealMatrix a(dim, dim);
  const double inv_d = 1.0 / static_cast<double>(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += b(k, i) * b(k, j);
      a(i, j) = s * inv_d + (i == j ? 0.1 : 0.0);
      a(j, i) = a(i, j);
    }
  }
  return a;
}

double TargetFunction::operator()(std::span<const double> x) const {
  if (x.size() != dim) {
    throw ShapeError(to_string(id) + ": point has " + std::to_string(x.size()) +
                     " entries, expected " + std::to_string(dim));
  }
  switch (id) {
    case FunctionId::f1: return x[0] * x[0];
    case FunctionId::f2: {
      const double v = x[0];
      return v * v + 10.0 * (v < 0.0 ? std::expm1(v) : v);
    }
    case FunctionId::f3: {
      const double s = x[0] * x[0] + 1.0;
      return s * s;
    }
    case FunctionId::f4: {
      const double v = x[0];
      return std::max(std::abs(v), 0.5 * (v * v - 3.0));
    }
    case FunctionId::f5: {
      const double v = x[0], y = x[1];
      return y * y * std::abs(v + 2.0 * v * v * v);
    }
    case FunctionId::f6: {
      const double v = x[0], y = x[1];
      return (1.0 + std::abs(y)) * std::abs(v + 2.0 * v * v * v);
    }
    case FunctionId::f7: {
      const double v = x[0], y = x[1];
      return std::max(y, 0.0) * std::abs(v) + v * v;
    }
    case FunctionId::f8: {
      double s = 0.0;
      for (double v : x) s += v * v;
      return s;
    }
    case FunctionId::f9: {
      double s = 0.0;
      for (double v : x) s += std::abs(v) + std::abs(1.0 - v);
      for (std::size_t i = 0; i < dim; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < dim; ++j) row += spd(i, j) * x[j];
        s += x[i] * row;
      }
      return s;
    }
    case FunctionId::f10: {
      const std::size_t n = dim - convex_dim;
      double xx = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < n; ++i) xx += x[i] * x[i];
      for (std::size_t i = n; i < dim; ++i) yy += x[i] * x[i];
      return -xx / (2.0 * static_cast<double>(n)) + yy / (2.0 * static_cast<double>(convex_dim));
    }
  }
  return 0.0;
}

TargetFunction make_target(FunctionId id, std::size_t dim, std::size_t nonconvex_dim,
                           std::uint64_t spd_seed) {
  TargetFunction f;
  f.id = id;
  switch (id) {
    case FunctionId::f1:
    case FunctionId::f2:
    case FunctionId::f3:
    case FunctionId::f4:
      f.dim = 1;
      f.convex_dim = 1;
      break;
    case FunctionId::f5:
    case FunctionId::f6:
    case FunctionId::f7:
      f.dim = 2;
      f.convex_dim = 1;
      break;
    case FunctionId::f8:
    case FunctionId::f9:
      f.dim = dim == 0 ? 2 : dim;
      f.convex_dim = f.dim;
      if (id == FunctionId::f9) f.spd = make_spd(f.dim, spd_seed);
      break;
    case FunctionId::f10: {
      const std::size_t m = dim == 0 ? 17 : dim;
      const std::size_t n = nonconvex_dim == 0 ? 376 : nonconvex_dim;
      f.dim = n + m;
      f.convex_dim = m;
      break;
    }
  }
  return f;
}

SamplerSpec default_sampler(const TargetFunction& f) {
  switch (f.id) {
    case FunctionId::f1:
    case FunctionId::f2:
    case FunctionId::f3:
    case FunctionId::f4:
      return SamplerSpec::gaussian(1, 0.0, 4.0);
    default:
      return SamplerSpec::gaussian(f.dim, 0.0, 1.0);
  }
}

double mc_mse(const TrainedModel& model, const TargetFunction& target, const SamplerSpec& sampler,
              std::size_t n, std::uint64_t eval_seed) {
  if (n == 0) throw StructuralError("mc_mse: needs at least one sample");
  if (sampler.dim != target.dim || model.model.input_dim() != target.dim) {
    throw ShapeError("mc_mse: model, target and sampler dimensions disagree");
  }
  Rng rng(eval_seed);
  std::vector<double> x(sampler.dim), scratch;
  Tape tape;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sample_into(sampler, x, rng);
    const double r = target(x) - model.predict(x, tape, scratch);
    sum += r * r;
  }
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------- run_case

void BenchmarkCase::validate() const {
  train.validate();
  if (train.sampler.dim != target.dim) {
    throw StructuralError(label + ": sampler dimension does not match " + to_string(target.id));
  }
  if (runs == 0) throw StructuralError(label + ": runs must be >= 1");
  if (eval_samples == 0) throw StructuralError(label + ": eval_samples must be >= 1");
  // Building once surfaces structural errors before any training.
  build_model(arch, target.dim, target.convex_dim, 0);
}

CaseResult run_case(const BenchmarkCase& c, bool keep_best) {
  c.validate();
  const auto start = std::chrono::steady_clock::now();
  const TargetFn fn = c.target.as_fn();
  CaseResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < c.runs; ++r) {
    Model model = build_model(c.arch, c.target.dim, c.target.convex_dim, mix_seed(c.seed, 2 * r));
    TrainConfig cfg = c.train;
    cfg.seed = mix_seed(c.seed, 2 * r + 1);
    try {
      TrainReport rep = fit(model, fn, cfg);
      TrainedModel tm{std::move(model), rep.normalizer};
      const double mse = mc_mse(tm, c.target, c.train.sampler, c.eval_samples, c.eval_seed);
      if (!std::isfinite(mse)) throw NumericalError("non-finite evaluation MSE");
      out.mse.push_back(mse);
      if (mse < best) {
        best = mse;
        if (keep_best) out.best = std::move(tm);
      }
    } catch (const NumericalError& e) {
      out.mse.push_back(std::numeric_limits<double>::quiet_NaN());
      out.failures.push_back("run " + std::to_string(r) + ": " + e.what());
    }
  }
  std::vector<double> ok;
  for (double v : out.mse) {
    if (std::isfinite(v)) ok.push_back(v);
  }
  if (ok.empty()) {
    out.min = out.median = out.max = std::numeric_limits<double>::quiet_NaN();
  } else {
    std::sort(ok.begin(), ok.end());
    out.min = ok.front();
    out.max = ok.back();
    const std::size_t m = ok.size() / 2;
    out.median = ok.size() % 2 ? ok[m] : 0.5 * (ok[m - 1] + ok[m]);
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ------------------------------------------------------------------ tables

namespace {

struct Cell {
  std::string row;
  std::string col;
  BenchmarkCase bench;
};

struct TableLayout {
  std::string row_header;
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<Cell> cells;
  std::string notes;
};

ArchSpec groupmax_arch(std::size_t layers, std::size_t width, std::size_t g) {
  ArchSpec a;
  a.kind = ModelKind::groupmax;
  a.widths.assign(layers, width);
  a.group_size = g;
  return a;
}

ArchSpec partial_groupmax_arch(std::size_t layers, std::size_t width, std::size_t g) {
  ArchSpec a;
  a.kind = ModelKind::partial_groupmax;
  a.ff_width = width;
  a.convex_width = width;
  a.layers = layers;
  a.group_size = g;
  return a;
}

ArchSpec icnn_arch(std::size_t hidden, std::size_t width) {
  ArchSpec a;
  a.kind = ModelKind::icnn;
  a.widths.assign(hidden, width);
  return a;
}

ArchSpec partial_icnn_arch(std::size_t hidden, std::size_t width) {
  ArchSpec a;
  a.kind = ModelKind::partial_icnn;
  a.ff_width = width;
  a.convex_width = width;
  a.layers = hidden + 1;
  return a;
}

ArchSpec mlp_arch(std::size_t hidden, std::size_t width) {
  ArchSpec a;
  a.kind = ModelKind::mlp;
  a.widths.assign(hidden, width);
  return a;
}

ArchSpec max_affine_arch(std::size_t cuts) {
  ArchSpec a;
  a.kind = ModelKind::max_affine;
  a.cuts = cuts;
  return a;
}

std::size_t scaled(std::size_t v, double s, std::size_t floor) {
  return std::max(floor, static_cast<std::size_t>(std::llround(static_cast<double>(v) * s)));
}

BenchmarkCase make_case(const std::string& label, const TargetFunction& f, const SamplerSpec& s,
                        const ArchSpec& arch, std::size_t iterations, double noise,
                        const TableOptions& opt, std::size_t runs = 10) {
  BenchmarkCase c;
  c.label = label;
  c.target = f;
  c.arch = arch;
  c.train.sampler = s;
  c.train.noise_std = noise;
  c.train.iterations = scaled(iterations, opt.scale, 1);
  c.runs = opt.runs ? *opt.runs : scaled(runs, opt.scale, 1);
  c.eval_samples = scaled(1000000, std::min(opt.scale, 1.0), 10000);
  c.eval_seed = mix_seed(0xE7A1, static_cast<std::uint64_t>(f.id));
  // Seeds depend only on the label so a case reproduces in any table.
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : label) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  c.seed = h;
  return c;
}

std::string sampling_name(const SamplerSpec& s) {
  return s.law == SamplingLaw::gaussian ? "gaussian" : "uniform";
}

const std::vector<FunctionId> kOneDim = {FunctionId::f1, FunctionId::f2, FunctionId::f3,
                                         FunctionId::f4};
const std::vector<FunctionId> kPartial = {FunctionId::f5, FunctionId::f6, FunctionId::f7};

std::vector<std::string> names(const std::vector<FunctionId>& ids) {
  std::vector<std::string> out;
  for (FunctionId id : ids) out.push_back(to_string(id));
  return out;
}

TableLayout layout_for(const std::string& id, const TableOptions& opt) {
  TableLayout t;
  const SamplerSpec gauss4 = SamplerSpec::gaussian(1, 0.0, 4.0);
  if (id == "T1") {
    t.row_header = "network";
    t.rows = {"feedforward", "icnn", "groupmax"};
    t.cols = names(kOneDim);
    for (FunctionId fid : kOneDim) {
      const TargetFunction f = make_target(fid);
      const std::string fn = to_string(fid);
      t.cells.push_back({"feedforward", fn, make_case("T1/mlp/" + fn, f, gauss4, mlp_arch(3, 10), 50000, 0.0, opt)});
      t.cells.push_back({"icnn", fn, make_case("T1/icnn/" + fn, f, gauss4, icnn_arch(3, 10), 50000, 0.0, opt)});
      t.cells.push_back({"groupmax", fn, make_case("T1/groupmax/" + fn, f, gauss4, groupmax_arch(3, 10, 5), 50000, 0.0, opt)});
    }
  } else if (id == "T2") {
    t.row_header = "K,group_size";
    t.cols = names(kOneDim);
    for (std::size_t k : {2, 4, 6, 12}) {
      const std::size_t g = 12 / k;
      const std::string row = std::to_string(k) + "," + std::to_string(g);
      t.rows.push_back(row);
      for (FunctionId fid : kOneDim) {
        const std::string fn = to_string(fid);
        t.cells.push_back({row, fn, make_case("T2/K" + std::to_string(k) + "/" + fn, make_target(fid), gauss4, groupmax_arch(3, 12, g), 50000, 0.0, opt)});
      }
    }
    t.notes =
        "K is read as the number of groups K = M/G with M = 12 neurons per layer, so the group "
        "size is G = 12/K (K = 12 means G = 1). Reading K as the group size instead "
        "corresponds to swapping the K = 2 and K = 6 rows; K = 12 would then be a single group.\n";
  } else if (id == "T3") {
    t.row_header = "q";
    t.cols = names(kOneDim);
    for (std::size_t q : {2, 3, 4, 5}) {
      t.rows.push_back(std::to_string(q));
      for (FunctionId fid : kOneDim) {
        const std::string fn = to_string(fid);
        t.cells.push_back({std::to_string(q), fn, make_case("T3/q" + std::to_string(q) + "/" + fn, make_target(fid), gauss4, groupmax_arch(q, 12, 2), 50000, 0.0, opt)});
      }
    }
  } else if (id == "T4" || id == "T5") {
    const SamplerSpec s = id == "T4" ? SamplerSpec::gaussian(2, 0.0, 1.0) : SamplerSpec::uniform(2, -2.0, 2.0);
    t.row_header = "network";
    t.rows = {"feedforward", "icnn", "groupmax"};
    t.cols = names(kPartial);
    for (FunctionId fid : kPartial) {
      const TargetFunction f = make_target(fid);
      const std::string fn = to_string(fid);
      t.cells.push_back({"feedforward", fn, make_case(id + "/mlp/" + fn, f, s, mlp_arch(3, 10), 50000, 0.0, opt)});
      t.cells.push_back({"icnn", fn, make_case(id + "/picnn/" + fn, f, s, partial_icnn_arch(3, 10), 50000, 0.0, opt)});
      t.cells.push_back({"groupmax", fn, make_case(id + "/groupmax/" + fn, f, s, partial_groupmax_arch(3, 10, 5), 50000, 0.0, opt)});
    }
  } else if (id == "T6") {
    t.row_header = "sampling,q";
    t.cols = names(kPartial);
    for (const SamplerSpec& s : {SamplerSpec::gaussian(2, 0.0, 1.0), SamplerSpec::uniform(2, -2.0, 2.0)}) {
      for (std::size_t q : {3, 4, 5}) {
        const std::string row = sampling_name(s) + "," + std::to_string(q);
        t.rows.push_back(row);
        for (FunctionId fid : kPartial) {
          const std::string fn = to_string(fid);
          t.cells.push_back({row, fn, make_case("T6/" + sampling_name(s) + "/q" + std::to_string(q) + "/" + fn, make_target(fid), s, partial_groupmax_arch(q, 12, 3), 50000, 0.0, opt)});
        }
      }
    }
    t.notes = "Group size G = 3 with 12 neurons per layer (K = 4 groups).\n";
  } else if (id == "T7" || id == "T8") {
    const FunctionId fid = id == "T7" ? FunctionId::f8 : FunctionId::f9;
    t.row_header = "sampling,network";
    t.cols = {"d2", "d3", "d4", "d5"};
    for (const SamplerSpec& base : {SamplerSpec::gaussian(1, 0.0, 1.0), SamplerSpec::uniform(1, -2.0, 2.0)}) {
      for (const auto& [net, arch] : std::vector<std::pair<std::string, ArchSpec>>{
               {"feedforward", mlp_arch(3, 10)}, {"icnn", icnn_arch(3, 10)}, {"groupmax", groupmax_arch(5, 10, 2)}}) {
        const std::string row = sampling_name(base) + "," + net;
        t.rows.push_back(row);
        for (std::size_t d = 2; d <= 5; ++d) {
          SamplerSpec s = base;
          s.dim = d;
          t.cells.push_back({row, "d" + std::to_string(d), make_case(id + "/" + sampling_name(base) + "/" + net + "/d" + std::to_string(d), make_target(fid, d), s, arch, 100000, 0.0, opt)});
        }
      }
    }
    if (fid == FunctionId::f9) {
      t.notes = "f9 uses A = (1/d) B^T B + 0.1 I with B standard normal, seed " +
                std::to_string(kDefaultSpdSeed) + ".\n";
    }
  } else if (id == "T9") {
    t.row_header = "function";
    t.rows = {"f8", "f9"};
    t.cols = {"q4", "q6", "q7", "q8"};
    const SamplerSpec s = SamplerSpec::uniform(5, -2.0, 2.0);
    for (FunctionId fid : {FunctionId::f8, FunctionId::f9}) {
      for (std::size_t q : {4, 6, 7, 8}) {
        t.cells.push_back({to_string(fid), "q" + std::to_string(q), make_case("T9/" + to_string(fid) + "/q" + std::to_string(q), make_target(fid, 5), s, groupmax_arch(q, 10, 2), 100000, 0.0, opt)});
      }
    }
  } else if (id == "T10") {
    t.row_header = "q";
    t.cols = {"feedforward", "icnn", "groupmax"};
    const TargetFunction f = make_target(FunctionId::f10);
    const SamplerSpec s = SamplerSpec::gaussian(f.dim, 0.0, 1.0);
    for (std::size_t q : {3, 5, 7, 9}) {
      const std::string row = std::to_string(q);
      const std::string tag = "T10/q" + row;
      t.rows.push_back(row);
      t.cells.push_back({row, "feedforward", make_case(tag + "/mlp", f, s, mlp_arch(q, 20), 100000, 0.0, opt)});
      t.cells.push_back({row, "icnn", make_case(tag + "/picnn", f, s, partial_icnn_arch(q, 10), 100000, 0.0, opt)});
      t.cells.push_back({row, "groupmax", make_case(tag + "/groupmax", f, s, partial_groupmax_arch(q, 12, 2), 100000, 0.0, opt)});
    }
    t.notes = "x in R^376 is the non-convex input, y in R^17 the convex one.\n";
  } else {
    throw StructuralError("unknown table id '" + id + "'");
  }
  return t;
}

std::string cell_value(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

// ----------------------------------------------------------------- figures

constexpr double kPlotLo = -6.0;
constexpr double kPlotHi = 6.0;
constexpr std::size_t kPlotPoints = 401;

double grid_point(std::size_t i) {
  return kPlotLo + (kPlotHi - kPlotLo) * static_cast<double>(i) / static_cast<double>(kPlotPoints - 1);
}

std::vector<Cell> figure_cells(const std::string& id, const TableOptions& opt) {
  std::vector<Cell> cells;
  const SamplerSpec gauss4 = SamplerSpec::gaussian(1, 0.0, 4.0);
  for (FunctionId fid : kOneDim) {
    const TargetFunction f = make_target(fid);
    const std::string fn = to_string(fid);
    if (id == "F1" || id == "F2") {
      for (std::size_t n : {2, 8, 32, 128}) {
        BenchmarkCase c = make_case(id + "/" + fn + "/N" + std::to_string(n), f, gauss4, max_affine_arch(n), 20000, 1.0, opt, 1);
        c.train.normalize = id == "F2";
        cells.push_back({fn, std::to_string(n), c});
      }
    } else if (id == "F3") {
      cells.push_back({fn, "feedforward", make_case("F3/" + fn + "/mlp", f, gauss4, mlp_arch(3, 10), 50000, 1.0, opt, 1)});
      cells.push_back({fn, "icnn", make_case("F3/" + fn + "/icnn", f, gauss4, icnn_arch(3, 10), 50000, 1.0, opt, 1)});
      cells.push_back({fn, "groupmax", make_case("F3/" + fn + "/groupmax", f, gauss4, groupmax_arch(3, 10, 5), 50000, 1.0, opt, 1)});
    } else if (id == "F4") {
      cells.push_back({fn, "groupmax", make_case("F4/" + fn + "/groupmax", f, gauss4, groupmax_arch(3, 10, 5), 50000, 1.0, opt, 1)});
    }
  }
  return cells;
}

TableOutput run_figure(const std::string& id, const TableOptions& opt) {
  const std::vector<Cell> cells = figure_cells(id, opt);
  TableOutput out;
  std::ostringstream csv, detail;
  detail << "case,runs,iterations,min_mse,median_mse,max_mse,failures\n";
  const bool cuts = id == "F4";
  if (!cuts) csv << "function," << (id == "F3" ? "network" : "cuts") << ",x,target,prediction\n";

  std::vector<std::string> cut_rows;
  std::size_t max_cuts = 0;
  for (const Cell& cell : cells) {
    if (opt.verbose) std::cerr << "[" << id << "] " << cell.bench.label << " ..." << std::flush;
    CaseResult r = run_case(cell.bench, true);
    if (opt.verbose) std::cerr << " best mse " << cell_value(r.min) << "\n";
    detail << cell.bench.label << ',' << cell.bench.runs << ',' << cell.bench.train.iterations << ','
           << cell_value(r.min) << ',' << cell_value(r.median) << ',' << cell_value(r.max) << ','
           << r.failures.size() << '\n';
    if (!r.best) continue;
    const TrainedModel& tm = *r.best;
    Tape tape;
    std::vector<double> scratch;
    if (!cuts) {
      for (std::size_t i = 0; i < kPlotPoints; ++i) {
        const double x = grid_point(i);
        csv << cell.row << ',' << cell.col << ',' << format_double(x) << ','
            << format_double(cell.bench.target(std::span<const double>(&x, 1))) << ','
            << format_double(tm.predict(std::span<const double>(&x, 1), tape, scratch)) << '\n';
      }
      continue;
    }
    // F4: enumerated cuts mapped back to original coordinates.
    const auto* net = tm.model.get_if<GroupMaxNet>();
    EnumerationStats stats;
    CutSet set = enumerate_cuts(*net, kDefaultCutCap, &stats);
    std::vector<Cut> shown;
    for (Cut& c : set.cuts) shown.push_back(tm.normalizer ? denormalize_cut(c, *tm.normalizer) : c);
    if (shown.size() > 256) {
      std::vector<double> h(kPlotPoints);
      for (std::size_t i = 0; i < kPlotPoints; ++i) {
        const double x = grid_point(i);
        h[i] = tm.predict(std::span<const double>(&x, 1), tape, scratch);
      }
      std::vector<Cut> active;
      for (const Cut& c : shown) {
        bool touches = false;
        for (std::size_t i = 0; i < kPlotPoints && !touches; ++i) {
          const double x = grid_point(i);
          touches = std::abs(c.evaluate(std::span<const double>(&x, 1)) - h[i]) <= 1e-9 * (1.0 + std::abs(h[i]));
        }
        if (touches) active.push_back(c);
      }
      out.notes += cell.row + ": " + std::to_string(stats.raw) + " cuts enumerated, " +
                   std::to_string(set.cuts.size()) + " distinct, " + std::to_string(active.size()) +
                   " attain the max on the plotting grid and are listed.\n";
      shown = std::move(active);
    } else {
      out.notes += cell.row + ": " + std::to_string(stats.raw) + " cuts enumerated, " +
                   std::to_string(shown.size()) + " distinct, all listed.\n";
    }
    max_cuts = std::max(max_cuts, shown.size());
    for (std::size_t i = 0; i < kPlotPoints; ++i) {
      const double x = grid_point(i);
      std::ostringstream row;
      row << cell.row << ',' << format_double(x) << ','
          << format_double(cell.bench.target(std::span<const double>(&x, 1))) << ','
          << format_double(tm.predict(std::span<const double>(&x, 1), tape, scratch));
      for (const Cut& c : shown) row << ',' << format_double(c.evaluate(std::span<const double>(&x, 1)));
      cut_rows.push_back(row.str() + '\x1f' + std::to_string(shown.size()));
    }
  }
  if (cuts) {
    csv << "function,x,target,prediction";
    for (std::size_t j = 1; j <= max_cuts; ++j) csv << ",cut_" << j;
    csv << '\n';
    for (const std::string& r : cut_rows) {
      const auto sep = r.find('\x1f');
      const std::size_t n = std::stoul(r.substr(sep + 1));
      csv << r.substr(0, sep);
      for (std::size_t j = n; j < max_cuts; ++j) csv << ',';
      csv << '\n';
    }
  }
  out.csv = csv.str();
  out.detail_csv = detail.str();
  out.notes += "Curves over " + std::to_string(kPlotPoints) + " points on [-6, 6]; noisy targets f + N(0,1).\n";
  return out;
}

}  // namespace

std::vector<std::string> table_ids() {
  return {"T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "T9", "T10", "F1", "F2", "F3", "F4"};
}

std::vector<BenchmarkCase> table_cases(const std::string& id, const TableOptions& opt) {
  std::vector<BenchmarkCase> out;
  if (!id.empty() && id[0] == 'F') {
    for (auto& c : figure_cells(id, opt)) out.push_back(std::move(c.bench));
    if (out.empty()) throw StructuralError("unknown table id '" + id + "'");
    return out;
  }
  for (auto& c : layout_for(id, opt).cells) out.push_back(std::move(c.bench));
  return out;
}

TableOutput run_table(const std::string& id, const TableOptions& opt) {
  const auto ids = table_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    throw StructuralError("unknown table id '" + id + "'");
  }
  if (id[0] == 'F') return run_figure(id, opt);

  TableLayout t = layout_for(id, opt);
  std::map<std::pair<std::string, std::string>, double> best;
  std::ostringstream detail;
  detail << "case,runs,iterations,eval_samples,min_mse,median_mse,max_mse,failures\n";
  for (const Cell& cell : t.cells) {
    if (opt.verbose) std::cerr << "[" << id << "] " << cell.bench.label << " ..." << std::flush;
    const CaseResult r = run_case(cell.bench);
    if (opt.verbose) {
      std::cerr << " best mse " << cell_value(r.min) << " (" << r.wall_seconds << " s)\n";
    }
    best[{cell.row, cell.col}] = r.min;
    detail << cell.bench.label << ',' << cell.bench.runs << ',' << cell.bench.train.iterations
           << ',' << cell.bench.eval_samples << ',' << cell_value(r.min) << ','
           << cell_value(r.median) << ',' << cell_value(r.max) << ',' << r.failures.size() << '\n';
  }
  std::ostringstream csv;
  csv << t.row_header;
  for (const auto& c : t.cols) csv << ',' << c;
  csv << '\n';
  for (const auto& r : t.rows) {
    csv << r;
    for (const auto& c : t.cols) csv << ',' << cell_value(best.at({r, c}));
    csv << '\n';
  }
  TableOutput out;
  out.csv = csv.str();
  out.detail_csv = detail.str();
  out.notes = t.notes + "Values are the best test MSE over the runs listed in the detail file.\n";
  return out;
}

}  // namespace groupmax
