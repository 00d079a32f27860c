#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "groupmax/errors.hpp"
#include "groupmax/finite_diff.hpp"
#include "groupmax/linalg.hpp"
#include "groupmax/networks.hpp"
#include "groupmax/random.hpp"
#include "groupmax/tape.hpp"
#include "support.hpp"

using namespace groupmax;
using groupmax::testing::random_vector;

TEST(Affine, IdentityAndRowSum) {
  const RealMatrix id = RealMatrix::identity(2);
  EXPECT_EQ(affine(id, std::vector<double>{0, 0}, std::vector<double>{3, -2}),
            (std::vector<double>{3, -2}));
  const RealMatrix ones = RealMatrix::from_rows({{1, 1}});
  EXPECT_EQ(affine(ones, std::vector<double>{5}, std::vector<double>{2, 3}),
            (std::vector<double>{10}));
}

TEST(Affine, MatchesDoubleLoop) {
  Rng rng(7);
  RealMatrix a(7, 4);
  for (double& v : a.entries()) v = rng.normal();
  const auto b = random_vector(rng, 7);
  const auto v = random_vector(rng, 4);
  const auto out = affine(a, b, v);
  for (std::size_t i = 0; i < 7; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 4; ++j) s += a(i, j) * v[j];
    EXPECT_EQ(out[i], s + b[i]);
  }
}

TEST(Affine, ShapeMismatchThrows) {
  const RealMatrix a(2, 3);
  EXPECT_THROW(affine(a, std::vector<double>{0, 0}, std::vector<double>{1, 2}), ShapeError);
  EXPECT_THROW(affine(a, std::vector<double>{0}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(RealMatrix, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(RealMatrix(0, 2), ShapeError);
  EXPECT_THROW(RealMatrix(1, 2, std::vector<double>{1.0}), ShapeError);
  EXPECT_THROW(RealMatrix(1, 1, std::vector<double>{std::nan("")}), ShapeError);
}

TEST(ReluClamp, Examples) {
  EXPECT_EQ(relu_clamp(RealMatrix::from_rows({{-1, 2}, {0, 3}})),
            RealMatrix::from_rows({{0, 2}, {0, 3}}));
  const RealMatrix pos = RealMatrix::from_rows({{0.5, 2}, {0, 3}});
  EXPECT_EQ(relu_clamp(pos), pos);
  EXPECT_EQ(relu_clamp_gradient(RealMatrix::from_rows({{-1, 2}}), RealMatrix::from_rows({{1, 1}})),
            RealMatrix::from_rows({{0, 1}}));
}

TEST(ReluClamp, Idempotent) {
  Rng rng(3);
  RealMatrix a(5, 6);
  for (double& v : a.entries()) v = rng.normal();
  EXPECT_EQ(relu_clamp(relu_clamp(a)), relu_clamp(a));
}

TEST(ReluClamp, SubgradientAtZeroIsZero) {
  EXPECT_EQ(relu_clamp_gradient(RealMatrix::from_rows({{0.0}}), RealMatrix::from_rows({{1.0}})),
            RealMatrix::from_rows({{0.0}}));
}

TEST(GroupMax, Examples) {
  const std::vector<double> v{3, 1, 2, 5, 4, 0};
  const auto r = group_max(v, 3);
  EXPECT_EQ(r.values, (std::vector<double>{3, 5}));
  EXPECT_EQ(r.winners, (std::vector<std::uint32_t>{0, 3}));

  const auto one = group_max(v, 1);
  EXPECT_EQ(one.values, v);
  for (std::uint32_t i = 0; i < v.size(); ++i) EXPECT_EQ(one.winners[i], i);

  const auto all = group_max(v, 6);
  ASSERT_EQ(all.values.size(), 1u);
  EXPECT_EQ(all.values[0], global_max(v).value);
  EXPECT_THROW(group_max(v, 4), StructuralError);
}

TEST(GlobalMax, Examples) {
  const auto r = global_max(std::vector<double>{2, 7, 7});
  EXPECT_EQ(r.value, 7);
  EXPECT_EQ(r.winner, 1u);
  const auto s = global_max(std::vector<double>{-3});
  EXPECT_EQ(s.value, -3);
  EXPECT_EQ(s.winner, 0u);
}

namespace {

// Scan oracles written independently of the library.
std::pair<double, std::size_t> scan(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  std::size_t best = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    if (v[i] > v[best]) best = i;
  }
  return {v[best], best};
}

}  // namespace

TEST(GroupMax, MatchesScanOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t g = 1 + rng.next() % 4;
    const std::size_t k = 1 + rng.next() % 5;
    std::vector<double> v(g * k);
    // Coarse values so ties occur often.
    for (double& x : v) x = static_cast<double>(static_cast<int>(rng.next() % 5));
    const auto r = group_max(v, g);
    for (std::size_t i = 0; i < k; ++i) {
      const auto [val, at] = scan(v, i * g, (i + 1) * g);
      ASSERT_EQ(r.values[i], val);
      ASSERT_EQ(r.winners[i], at);
    }
    const auto gm = global_max(v);
    const auto [val, at] = scan(v, 0, v.size());
    ASSERT_EQ(gm.value, val);
    ASSERT_EQ(gm.winner, at);
  }
}

TEST(GlobalMax, RandomLength100) {
  Rng rng(5);
  const auto v = random_vector(rng, 100);
  const auto [val, at] = scan(v, 0, v.size());
  EXPECT_EQ(global_max(v).value, val);
  EXPECT_EQ(global_max(v).winner, at);
}

TEST(Tape, AbsoluteValueGradient) {
  // h(x) = max(x, -x) through a 2x1 affine and a global max.
  std::vector<double> params{1.0, -1.0};
  Tape tape(params);
  const double x = 3.0;
  const NodeId in = tape.input(std::span<const double>(&x, 1));
  const NodeId pre = tape.affine(ParamBlock{0, 2, 1}, ParamBlock{}, in);
  tape.global_max(pre);
  EXPECT_EQ(tape.output(), 3.0);
  std::vector<double> g(2, 0.0);
  tape.backward(1.0, g, true);
  EXPECT_EQ(tape.adjoint(in)[0], 1.0);
  EXPECT_EQ(g, (std::vector<double>{3.0, 0.0}));
}

TEST(Tape, AffineGradientIsTransposedAction) {
  Rng rng(9);
  std::vector<double> params = random_vector(rng, 3 * 4 + 3);
  const auto x = random_vector(rng, 4);
  Tape tape(params);
  const NodeId in = tape.input(x);
  const NodeId pre = tape.affine(ParamBlock{0, 3, 4}, ParamBlock{12, 3, 1}, in);
  const NodeId out = tape.global_max(pre);
  (void)out;
  std::vector<double> g(params.size(), 0.0);
  tape.backward(1.0, g, true);
  const std::size_t w = tape.winners(tape.max_nodes().back())[0];
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(tape.adjoint(in)[j], params[w * 4 + j]);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(g[w * 4 + j], x[j]);
  EXPECT_EQ(g[12 + w], 1.0);
}

TEST(Tape, BackwardNeedsScalarOutput) {
  std::vector<double> params{1.0, 2.0};
  Tape tape(params);
  const std::vector<double> x{1.0};
  const NodeId in = tape.input(x);
  tape.affine(ParamBlock{0, 2, 1}, ParamBlock{}, in);
  std::vector<double> g(2, 0.0);
  EXPECT_THROW(tape.backward(1.0, g), UsageError);
  EXPECT_THROW(tape.output(), UsageError);
}

TEST(Tape, BackwardAccumulates) {
  Rng rng(2);
  const Model m = groupmax::testing::random_model(ModelKind::groupmax, rng);
  const auto x = random_vector(rng, m.input_dim());
  Tape tape;
  m.forward(x, tape);
  std::vector<double> once(m.params().size(), 0.0), twice(m.params().size(), 0.0);
  tape.backward(1.0, once);
  tape.backward(1.0, twice);
  tape.backward(1.0, twice);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(twice[i], 2.0 * once[i]);
}

TEST(Tape, ReplayIsBitExact) {
  Rng rng(17);
  for (ModelKind kind : {ModelKind::groupmax, ModelKind::partial_groupmax, ModelKind::max_affine,
                         ModelKind::icnn, ModelKind::partial_icnn, ModelKind::mlp}) {
    for (int t = 0; t < 20; ++t) {
      const Model m = groupmax::testing::random_model(kind, rng);
      const auto x = random_vector(rng, m.input_dim());
      Tape tape;
      const double h = m.forward(x, tape);
      const double r = tape.replay();
      EXPECT_EQ(std::memcmp(&h, &r, sizeof h), 0) << to_string(kind);
    }
  }
}

TEST(FiniteDiff, QuadraticIsExact) {
  // f(t) = sum_i c_i t_i^2 + t_0 t_1
  const std::vector<double> c{1.0, -2.0, 0.5};
  DifferentiableFunction f;
  f.value = [&](std::span<const double> t) {
    return c[0] * t[0] * t[0] + c[1] * t[1] * t[1] + c[2] * t[2] * t[2] + t[0] * t[1];
  };
  f.gradient = [&](std::span<const double> t) {
    return std::vector<double>{2 * c[0] * t[0] + t[1], 2 * c[1] * t[1] + t[0], 2 * c[2] * t[2]};
  };
  const auto r = finite_diff_check(f, {0.3, -1.2, 2.0}, 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_EQ(r.checked, 3u);
}

TEST(FiniteDiff, DetectsWrongGradient) {
  DifferentiableFunction f;
  f.value = [](std::span<const double> t) { return t[0] * t[0]; };
  f.gradient = [](std::span<const double> t) { return std::vector<double>{3.0 * t[0]}; };
  EXPECT_GT(finite_diff_check(f, {1.0}, 1e-5).max_relative_error, 0.1);
}

TEST(FiniteDiff, GroupMaxNet) {
  Rng rng(21);
  for (int t = 0; t < 10; ++t) {
    Model m = groupmax::testing::jittered(GroupMaxNet::build(3, {8, 8}, 2, rng.next()), rng);
    const auto x = random_vector(rng, 3);
    const auto r = finite_diff_check(groupmax::testing::parameter_function(m, x),
                                     std::vector<double>(m.parameters().begin(), m.parameters().end()),
                                     1e-5, rng.next());
    EXPECT_LT(r.max_relative_error, 1e-4);
    EXPECT_GT(r.checked, 0u);
  }
}

TEST(FiniteDiff, PartialNet) {
  Rng rng(22);
  for (int t = 0; t < 10; ++t) {
    const Model m = groupmax::testing::random_model(ModelKind::partial_groupmax, rng);
    const auto x = random_vector(rng, m.input_dim());
    const auto r = finite_diff_check(groupmax::testing::parameter_function(m, x),
                                     std::vector<double>(m.parameters().begin(), m.parameters().end()),
                                     1e-5, rng.next());
    EXPECT_LT(r.max_relative_error, 1e-4);
  }
}

TEST(Random, SplitSeedsDiffer) {
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.normal(), b.normal());
  Rng u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}
