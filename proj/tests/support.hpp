#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "groupmax/finite_diff.hpp"
#include "groupmax/model.hpp"
#include "groupmax/model_io.hpp"
#include "groupmax/random.hpp"

namespace groupmax::testing {

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

/// Built model with every parameter jittered so no weight sits at its init
/// value (biases are no longer zero, some clamped weights go negative).
inline Model jittered(Model m, Rng& rng, double sigma = 0.3) {
  for (double& v : m.parameters()) v += sigma * rng.normal();
  return m;
}

/// Small random architecture of the given kind. Partial kinds have at least
/// one convex and one non-convex input.
inline Model random_model(ModelKind kind, Rng& rng) {
  const auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.next() % (hi - lo + 1));
  };
  ArchSpec a;
  a.kind = kind;
  std::size_t d = pick(1, 4);
  std::size_t k = d;
  switch (kind) {
    case ModelKind::groupmax: {
      a.group_size = pick(1, 3);
      const std::size_t q = pick(1, 3);
      for (std::size_t l = 0; l < q; ++l) a.widths.push_back(a.group_size * pick(1, 3));
      break;
    }
    case ModelKind::max_affine:
      a.cuts = pick(1, 8);
      break;
    case ModelKind::icnn:
    case ModelKind::mlp:
      for (std::size_t l = 0, n = pick(1, 3); l < n; ++l) a.widths.push_back(pick(2, 6));
      a.activation = rng.uniform() < 0.5 ? Activation::relu : Activation::tanh;
      break;
    case ModelKind::partial_groupmax:
    case ModelKind::partial_icnn:
      d = pick(2, 4);
      k = pick(1, d - 1);
      a.group_size = pick(1, 3);
      a.ff_width = pick(2, 5);
      a.convex_width = a.group_size * pick(1, 3);
      a.layers = pick(kind == ModelKind::partial_icnn ? 2 : 1, 3);
      a.activation = rng.uniform() < 0.5 ? Activation::relu : Activation::tanh;
      break;
  }
  return jittered(build_model(a, d, k, rng.next()), rng);
}

/// theta -> h(x) for a fixed input, with the tape's tie information.
inline DifferentiableFunction parameter_function(const Model& m, std::vector<double> x) {
  struct State {
    Model model;
    std::vector<double> x;
    Tape tape;
  };
  auto s = std::make_shared<State>(State{m, std::move(x), Tape{}});
  const auto run = [s](std::span<const double> theta) {
    std::copy(theta.begin(), theta.end(), s->model.parameters().begin());
    return s->model.forward(s->x, s->tape);
  };
  DifferentiableFunction f;
  f.value = run;
  f.gradient = [s, run](std::span<const double> theta) {
    run(theta);
    std::vector<double> g(theta.size(), 0.0);
    s->tape.backward(1.0, g);
    return g;
  };
  f.tie_gap = [s, run](std::span<const double> theta) {
    run(theta);
    return s->tape.tie_gap();
  };
  f.signature = [s, run](std::span<const double> theta) {
    run(theta);
    return s->tape.pattern_signature();
  };
  return f;
}

struct JensenResult {
  std::size_t violations = 0;
  double worst = 0.0;  // largest excess over the tolerance-free bound, relative
};

/// h(l a + (1-l) b) <= l h(a) + (1-l) h(b) + 1e-9 (1 + scale) at n random
/// triples; a, b drawn by draw(rng).
template <class H, class Draw>
JensenResult jensen_check(const H& h, const Draw& draw, std::size_t n, Rng& rng) {
  JensenResult r;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> a = draw(rng);
    const std::vector<double> b = draw(rng);
    const double lam = rng.uniform();
    std::vector<double> m(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) m[j] = lam * a[j] + (1.0 - lam) * b[j];
    const double ha = h(a), hb = h(b), hm = h(m);
    const double scale = std::max({std::abs(ha), std::abs(hb), std::abs(hm)});
    const double excess = hm - (lam * ha + (1.0 - lam) * hb);
    r.worst = std::max(r.worst, excess / (1.0 + scale));
    if (excess > 1e-9 * (1.0 + scale)) ++r.violations;
  }
  return r;
}

/// Jensen in y at a fixed x~ for a partial model (input = x~ then y).
inline JensenResult partial_jensen(const Model& m, std::span<const double> x_tilde, std::size_t n,
                                   Rng& rng, double spread = 2.0) {
  const std::size_t k = m.convex_dim();
  Tape tape;
  std::vector<double> full(m.input_dim());
  std::copy(x_tilde.begin(), x_tilde.end(), full.begin());
  const auto h = [&](const std::vector<double>& y) {
    std::copy(y.begin(), y.end(), full.begin() + static_cast<std::ptrdiff_t>(x_tilde.size()));
    return m.forward(full, tape);
  };
  const auto draw = [&](Rng& r) { return random_vector(r, k, spread); };
  return jensen_check(h, draw, n, rng);
}

inline JensenResult full_jensen(const Model& m, std::size_t n, Rng& rng, double spread = 2.0) {
  Tape tape;
  const auto h = [&](const std::vector<double>& x) { return m.forward(x, tape); };
  const auto draw = [&](Rng& r) { return random_vector(r, m.input_dim(), spread); };
  return jensen_check(h, draw, n, rng);
}

}  // namespace groupmax::testing
