#include "groupmax/cuts.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "groupmax/text.hpp"

namespace groupmax {

double Cut::evaluate(std::span<const double> x) const {
  if (x.size() != slope.size()) throw ShapeError("Cut::evaluate: dimension mismatch");
  return dot(slope, x) + intercept;
}

double eval_cutset(const CutSet& c, std::span<const double> x) {
  if (c.cuts.empty()) throw ShapeError("eval_cutset: empty cut set");
  if (x.size() != c.dim) {
    throw ShapeError("eval_cutset: point has " + std::to_string(x.size()) +
                     " entries, cut set dimension is " + std::to_string(c.dim));
  }
  double best = c.cuts.front().evaluate(x);
  for (std::size_t i = 1; i < c.cuts.size(); ++i) best = std::max(best, c.cuts[i].evaluate(x));
  return best;
}

// ------------------------------------------------------------- layered form

double CutNetwork::evaluate(std::span<const double> y) const {
  std::vector<double> z;
  double out = 0.0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const CutLayer& L = layers[i];
    std::vector<double> pre = affine(L.y_weight, L.bias, y);
    if (i > 0) {
      const std::vector<double> zz = affine(L.z_weight, {}, z);
      for (std::size_t m = 0; m < pre.size(); ++m) pre[m] += zz[m];
    }
    if (i + 1 < layers.size()) {
      z = group_max(pre, group_size).values;
    } else {
      out = global_max(pre).value;
    }
  }
  return out;
}

CutNetwork cut_network(const GroupMaxNet& net) {
  CutNetwork cn;
  cn.dim = net.input_dim();
  cn.group_size = net.group_size();
  const ParamStore& ps = net.params();
  for (std::size_t j = 0; j < net.layer_count(); ++j) {
    CutLayer L;
    const MatrixView w = ps.matrix(net.weight(j));
    const auto b = ps.span(net.bias(j));
    L.bias.assign(b.begin(), b.end());
    if (j == 0) {
      L.y_weight = RealMatrix(w.rows, w.cols, std::vector<double>(w.data, w.data + w.size()));
    } else {
      L.y_weight = RealMatrix(w.rows, cn.dim);
      L.z_weight = relu_clamp(RealMatrix(w.rows, w.cols, std::vector<double>(w.data, w.data + w.size())));
    }
    cn.layers.push_back(std::move(L));
  }
  return cn;
}

CutNetwork cut_network(const MaxAffineNet& net) {
  CutNetwork cn;
  cn.dim = net.input_dim();
  cn.group_size = 1;
  const ParamStore& ps = net.params();
  const MatrixView a = ps.matrix(net.slopes());
  const auto b = ps.span(net.intercepts());
  CutLayer L;
  L.y_weight = RealMatrix(a.rows, a.cols, std::vector<double>(a.data, a.data + a.size()));
  L.bias.assign(b.begin(), b.end());
  cn.layers.push_back(std::move(L));
  return cn;
}

namespace {

void apply_activation(Activation act, std::vector<double>& v) {
  for (double& x : v) {
    switch (act) {
      case Activation::relu: x = x > 0.0 ? x : 0.0; break;
      case Activation::tanh: x = std::tanh(x); break;
      case Activation::identity: break;
    }
  }
}

}  // namespace

CutNetwork conditional_cut_network(const PartialGroupMaxNet& net, std::span<const double> x_tilde) {
  const PartialShape& s = net.shape();
  if (x_tilde.size() != s.nonconvex_dim()) {
    throw ShapeError("conditional_cut_network: x~ has " + std::to_string(x_tilde.size()) +
                     " entries, expected " + std::to_string(s.nonconvex_dim()));
  }
  const ParamStore& ps = net.params();
  CutNetwork cn;
  cn.dim = s.convex_dim;
  cn.group_size = net.group_size();
  std::vector<double> u(x_tilde.begin(), x_tilde.end());
  for (std::size_t i = 0; i < s.layers; ++i) {
    const PartialLayer& P = net.layer(i);
    CutLayer L;
    L.bias = affine(ps.matrix(P.u_weight), ps.span(P.bias), u);
    // S = W^(y) (x) (W^(yu) u + b^(y))
    const std::vector<double> gate_y = affine(ps.matrix(P.yu_weight), ps.span(P.y_bias), u);
    const MatrixView wy = ps.matrix(P.y_weight);
    L.y_weight = RealMatrix(wy.rows, wy.cols);
    for (std::size_t r = 0; r < wy.rows; ++r)
      for (std::size_t c = 0; c < wy.cols; ++c) L.y_weight(r, c) = wy(r, c) * gate_y[c];
    if (i > 0) {
      // P = [W^(z) (x) (W^(zu) u + b^(z))]^+
      const std::vector<double> gate_z = affine(ps.matrix(P.zu_weight), ps.span(P.z_bias), u);
      const MatrixView wz = ps.matrix(P.z_weight);
      L.z_weight = RealMatrix(wz.rows, wz.cols);
      for (std::size_t r = 0; r < wz.rows; ++r)
        for (std::size_t c = 0; c < wz.cols; ++c) {
          const double p = wz(r, c) * gate_z[c];
          L.z_weight(r, c) = p > 0.0 ? p : 0.0;
        }
    }
    cn.layers.push_back(std::move(L));
    if (i + 1 < s.layers) {
      u = affine(ps.matrix(P.ff_weight), ps.span(P.ff_bias), u);
      apply_activation(s.ff_activation, u);
    }
  }
  return cn;
}

// -------------------------------------------------------------- enumeration

double predicted_cut_count(const CutNetwork& net) {
  const std::size_t q = net.layers.size();
  const std::size_t g = net.group_size;
  std::vector<double> per_group;
  double total = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    const std::size_t m = net.layers[i].bias.size();
    std::vector<double> per_neuron(m, 1.0);
    if (i > 0) {
      double prod = 1.0;
      for (double c : per_group) prod *= c;
      std::fill(per_neuron.begin(), per_neuron.end(), prod);
    }
    if (i + 1 < q) {
      per_group.assign(m / g, 0.0);
      for (std::size_t n = 0; n < m; ++n) per_group[n / g] += per_neuron[n];
    } else {
      total = std::accumulate(per_neuron.begin(), per_neuron.end(), 0.0);
    }
  }
  return total;
}

double formula_cut_count(const GroupMaxNet& net) {
  const double m = static_cast<double>(net.widths().back());
  const double g = static_cast<double>(net.group_size());
  const double k = static_cast<double>(net.groups(0));
  const double q = static_cast<double>(net.layer_count());
  return m * std::pow(g, k * (q - 1.0));
}

std::vector<Cut> deduplicate(std::vector<Cut> cuts, double tol) {
  if (cuts.size() < 2) return cuts;
  std::vector<std::size_t> order(cuts.size());
  std::iota(order.begin(), order.end(), 0);
  const auto key_less = [&](std::size_t a, std::size_t b) {
    if (cuts[a].intercept != cuts[b].intercept) return cuts[a].intercept < cuts[b].intercept;
    return cuts[a].slope < cuts[b].slope;
  };
  std::stable_sort(order.begin(), order.end(), key_less);
  const auto close = [&](const Cut& a, const Cut& b) {
    if (std::abs(a.intercept - b.intercept) > tol) return false;
    for (std::size_t i = 0; i < a.slope.size(); ++i) {
      if (std::abs(a.slope[i] - b.slope[i]) > tol) return false;
    }
    return true;
  };
  std::vector<char> keep(cuts.size(), 0);
  std::size_t run_start = 0;
  std::size_t run_best = order[0];
  for (std::size_t r = 1; r <= order.size(); ++r) {
    if (r < order.size() && close(cuts[order[run_start]], cuts[order[r]])) {
      run_best = std::min(run_best, order[r]);
      continue;
    }
    keep[run_best] = 1;
    if (r < order.size()) {
      run_start = r;
      run_best = order[r];
    }
  }
  std::vector<Cut> out;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    if (keep[i]) out.push_back(std::move(cuts[i]));
  }
  return out;
}

CutSet enumerate_cuts(const CutNetwork& net, std::uint64_t cap, EnumerationStats* stats,
                      double formula) {
  const double predicted = predicted_cut_count(net);
  if (predicted > static_cast<double>(cap)) throw CutOverflowError(predicted, formula, cap);

  const std::size_t q = net.layers.size();
  const std::size_t g = net.group_size;
  const std::size_t dim = net.dim;
  std::vector<std::vector<Cut>> groups;  // cuts realised by each z_{i-1} entry
  std::vector<Cut> out;
  for (std::size_t i = 0; i < q; ++i) {
    const CutLayer& L = net.layers[i];
    const std::size_t m = L.bias.size();
    const bool last = i + 1 == q;
    std::vector<std::vector<Cut>> next(last ? 0 : m / g);
    for (std::size_t n = 0; n < m; ++n) {
      std::vector<Cut>& dest = last ? out : next[n / g];
      Cut base;
      const auto row = L.y_weight.row(n);
      base.slope.assign(row.begin(), row.end());
      base.intercept = L.bias[n];
      if (i == 0) {
        dest.push_back(std::move(base));
        continue;
      }
      // Mixed-radix walk over one cut choice per input group.
      const std::size_t k = groups.size();
      std::vector<std::size_t> choice(k, 0);
      while (true) {
        Cut c = base;
        for (std::size_t j = 0; j < k; ++j) {
          const double w = L.z_weight(n, j);
          const Cut& src = groups[j][choice[j]];
          c.intercept += w * src.intercept;
          for (std::size_t t = 0; t < dim; ++t) c.slope[t] += w * src.slope[t];
        }
        dest.push_back(std::move(c));
        std::size_t j = 0;
        while (j < k && ++choice[j] == groups[j].size()) choice[j++] = 0;
        if (j == k) break;
      }
    }
    groups = std::move(next);
  }

  CutSet set;
  set.dim = dim;
  const std::size_t raw = out.size();
  set.cuts = deduplicate(std::move(out));
  if (stats) {
    stats->predicted = predicted;
    stats->formula = formula;
    stats->raw = raw;
    stats->kept = set.cuts.size();
  }
  return set;
}

CutSet enumerate_cuts(const GroupMaxNet& net, std::uint64_t cap, EnumerationStats* stats) {
  CutSet s = enumerate_cuts(cut_network(net), cap, stats, formula_cut_count(net));
  s.model_hash = model_hash(net.params());
  return s;
}

CutSet enumerate_cuts(const MaxAffineNet& net, std::uint64_t cap, EnumerationStats* stats) {
  CutSet s = enumerate_cuts(cut_network(net), cap, stats,
                            static_cast<double>(net.cut_count()));
  s.model_hash = model_hash(net.params());
  return s;
}

CutSet enumerate_conditional_cuts(const PartialGroupMaxNet& net, std::span<const double> x_tilde,
                                  std::uint64_t cap, EnumerationStats* stats) {
  const double m = static_cast<double>(net.shape().convex_width);
  const double formula =
      m * std::pow(static_cast<double>(net.group_size()),
                   static_cast<double>(net.groups()) * static_cast<double>(net.layer_count() - 1));
  CutSet s = enumerate_cuts(conditional_cut_network(net, x_tilde), cap, stats, formula);
  s.condition = std::vector<double>(x_tilde.begin(), x_tilde.end());
  s.model_hash = model_hash(net.params());
  return s;
}

// --------------------------------------------------------------- active cut

namespace {

// Composes the winning affine pieces of a layered form, bottom-up.
Cut walk_winners(const CutNetwork& net, const std::vector<std::span<const std::uint32_t>>& winners) {
  const std::size_t q = net.layers.size();
  if (winners.size() != q) throw UsageError("active_cut: tape does not match the network depth");
  const std::size_t dim = net.dim;
  std::vector<Cut> prev;
  for (std::size_t i = 0; i < q; ++i) {
    const CutLayer& L = net.layers[i];
    std::vector<Cut> cur;
    for (std::uint32_t n : winners[i]) {
      Cut c;
      const auto row = L.y_weight.row(n);
      c.slope.assign(row.begin(), row.end());
      c.intercept = L.bias[n];
      if (i > 0) {
        for (std::size_t j = 0; j < prev.size(); ++j) {
          const double w = L.z_weight(n, j);
          if (w == 0.0) continue;
          c.intercept += w * prev[j].intercept;
          for (std::size_t t = 0; t < dim; ++t) c.slope[t] += w * prev[j].slope[t];
        }
      }
      cur.push_back(std::move(c));
    }
    prev = std::move(cur);
  }
  return std::move(prev.front());
}

std::vector<std::span<const std::uint32_t>> tape_winners(const Tape& tape) {
  std::vector<std::span<const std::uint32_t>> w;
  for (NodeId n : tape.max_nodes()) w.push_back(tape.winners(n));
  return w;
}

// Slope from the input adjoint restricted to [offset, offset+len); the
// intercept closes the gap at the query point.
Cut gradient_cut(const Model& model, std::span<const double> x, std::size_t offset,
                 std::size_t len) {
  Tape tape;
  const double h = model.forward(x, tape);
  std::vector<double> grad(model.params().size());
  tape.backward(1.0, grad, true);
  const auto adj = tape.adjoint(0);
  Cut c;
  c.slope.assign(adj.begin() + static_cast<std::ptrdiff_t>(offset),
                 adj.begin() + static_cast<std::ptrdiff_t>(offset + len));
  c.intercept = h - dot(c.slope, x.subspan(offset, len));
  return c;
}

}  // namespace

Cut active_cut(const GroupMaxNet& net, std::span<const double> x) {
  Tape tape;
  net.forward(x, tape);
  return walk_winners(cut_network(net), tape_winners(tape));
}

Cut active_cut(const MaxAffineNet& net, std::span<const double> x) {
  Tape tape;
  net.forward(x, tape);
  return walk_winners(cut_network(net), tape_winners(tape));
}

Cut active_cut(const PartialGroupMaxNet& net, std::span<const double> x_tilde,
               std::span<const double> y) {
  Tape tape;
  net.forward(x_tilde, y, tape);
  return walk_winners(conditional_cut_network(net, x_tilde), tape_winners(tape));
}

Cut active_cut(const Model& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) throw ShapeError("active_cut: input dimension mismatch");
  if (const auto* n = model.get_if<GroupMaxNet>()) return active_cut(*n, x);
  if (const auto* n = model.get_if<MaxAffineNet>()) return active_cut(*n, x);
  if (const auto* n = model.get_if<PartialGroupMaxNet>()) {
    const std::size_t nx = n->shape().nonconvex_dim();
    return active_cut(*n, x.first(nx), x.subspan(nx));
  }
  if (model.kind() == ModelKind::icnn) return gradient_cut(model, x, 0, x.size());
  if (model.kind() == ModelKind::partial_icnn) {
    const std::size_t k = model.convex_dim();
    return gradient_cut(model, x, x.size() - k, k);
  }
  throw UsageError("active_cut: the MLP baseline is not convex and has no cuts");
}

Cut denormalize_cut(const Cut& c, const Normalizer& norm, std::size_t offset) {
  norm.validate();
  if (offset + c.slope.size() > norm.input_std.size()) {
    throw ShapeError("denormalize_cut: normalizer has too few input coordinates");
  }
  Cut out;
  out.slope.resize(c.slope.size());
  double shift = 0.0;
  for (std::size_t i = 0; i < c.slope.size(); ++i) {
    const double sx = norm.input_std[offset + i];
    const double mx = norm.input_mean[offset + i];
    out.slope[i] = norm.output_std * c.slope[i] / sx;
    shift += c.slope[i] * mx / sx;
  }
  out.intercept = norm.output_std * (c.intercept - shift) + norm.output_mean;
  return out;
}

std::string model_hash(const ParamStore& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : params.values()) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- file format

namespace {
constexpr std::string_view kConditionKey = "x\xCC\x83=";  // "x̃="
}

std::string format_cuts(const CutSet& c) {
  std::ostringstream out;
  out << "cuts v1 dim=" << c.dim << " n=" << c.cuts.size();
  if (c.condition) {
    out << " conditional " << kConditionKey;
    for (std::size_t i = 0; i < c.condition->size(); ++i) {
      if (i) out << ',';
      out << format_double((*c.condition)[i]);
    }
  }
  if (!c.model_hash.empty()) out << " model=" << c.model_hash;
  out << '\n';
  for (const Cut& cut : c.cuts) {
    out << format_double(cut.intercept);
    for (double s : cut.slope) out << ' ' << format_double(s);
    out << '\n';
  }
  return out.str();
}

CutSet parse_cuts(const std::string& text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(1, "empty cut file (missing header)");

  const auto tokens_of = [](std::string_view line) {
    std::vector<std::string_view> t;
    for (auto tok : split(line, ' ')) {
      if (!tok.empty()) t.push_back(tok);
    }
    return t;
  };
  const auto parse_count = [](std::string_view s, std::size_t line, const char* what) {
    std::size_t v = 0;
    for (char ch : s) {
      if (ch < '0' || ch > '9') throw ParseError(line, std::string("bad ") + what);
      v = v * 10 + static_cast<std::size_t>(ch - '0');
    }
    if (s.empty()) throw ParseError(line, std::string("bad ") + what);
    return v;
  };

  const auto header = tokens_of(lines[0]);
  if (header.size() < 4 || header[0] != "cuts" || header[1] != "v1" ||
      header[2].substr(0, 4) != "dim=" || header[3].substr(0, 2) != "n=") {
    throw ParseError(1, "expected header 'cuts v1 dim=<d> n=<N>'");
  }
  CutSet set;
  set.dim = parse_count(header[2].substr(4), 1, "dim");
  const std::size_t n = parse_count(header[3].substr(2), 1, "cut count");
  if (set.dim == 0) throw ParseError(1, "dim must be >= 1");
  for (std::size_t i = 4; i < header.size(); ++i) {
    if (header[i] == "conditional") {
      if (i + 1 >= header.size()) throw ParseError(1, "conditional without point");
      std::string_view tok = header[++i];
      if (tok.substr(0, kConditionKey.size()) == kConditionKey) {
        tok.remove_prefix(kConditionKey.size());
      } else if (tok.substr(0, 7) == "xtilde=") {
        tok.remove_prefix(7);
      } else {
        throw ParseError(1, "expected x̃=<reals> after 'conditional'");
      }
      std::vector<double> point;
      for (auto part : split(tok, ',')) {
        const auto v = parse_double(part);
        if (!v) throw ParseError(1, "bad conditioning value '" + std::string(part) + "'");
        point.push_back(*v);
      }
      set.condition = std::move(point);
    } else if (header[i].substr(0, 6) == "model=") {
      set.model_hash = std::string(header[i].substr(6));
    } else {
      throw ParseError(1, "unknown header field '" + std::string(header[i]) + "'");
    }
  }
  if (n == 0) throw ParseError(1, "a cut set must hold at least one cut");
  if (lines.size() - 1 != n) {
    throw ParseError(lines.size() < n + 1 ? lines.size() + 1 : n + 2,
                     "header declares " + std::to_string(n) + " cuts, file has " +
                         std::to_string(lines.size() - 1));
  }
  set.cuts.reserve(n);
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto toks = tokens_of(lines[l]);
    if (toks.size() != set.dim + 1) {
      throw ParseError(l + 1, "expected " + std::to_string(set.dim + 1) + " numbers, got " +
                                  std::to_string(toks.size()));
    }
    Cut c;
    c.slope.resize(set.dim);
    for (std::size_t t = 0; t < toks.size(); ++t) {
      const auto v = parse_double(toks[t]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(l + 1, "bad number '" + std::string(toks[t]) + "'");
      }
      (t == 0 ? c.intercept : c.slope[t - 1]) = *v;
    }
    set.cuts.push_back(std::move(c));
  }
  return set;
}

void export_cuts(const CutSet& c, const std::string& path) {
  write_file_atomic(path, format_cuts(c));
}

CutSet import_cuts(const std::string& path) { return parse_cuts(read_file(path)); }

}  // namespace groupmax
