#include "groupmax/linalg.hpp"

#include <cmath>
#include <string>

namespace groupmax {

namespace {

void require_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ShapeError("RealMatrix: non-finite entry");
  }
}

}  // namespace

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw ShapeError("RealMatrix: zero dimension");
}

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows == 0 || cols == 0) throw ShapeError("RealMatrix: zero dimension");
  if (entries_.size() != rows * cols) {
    throw ShapeError("RealMatrix: expected " + std::to_string(rows * cols) + " entries, got " +
                     std::to_string(entries_.size()));
  }
  require_finite(entries_);
}

RealMatrix RealMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> entries;
  entries.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("RealMatrix::from_rows: ragged rows");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return RealMatrix(r, c, std::move(entries));
}

RealMatrix RealMatrix::identity(std::size_t n) {
  RealMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

RealMatrix RealMatrix::transposed() const {
  RealMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

std::vector<double> affine(MatrixView a, std::span<const double> b, std::span<const double> v) {
  if (a.cols != v.size()) {
    throw ShapeError("affine: matrix has " + std::to_string(a.cols) + " columns, vector has " +
                     std::to_string(v.size()) + " entries");
  }
  if (!b.empty() && b.size() != a.rows) {
    throw ShapeError("affine: bias length " + std::to_string(b.size()) + " != rows " +
                     std::to_string(a.rows));
  }
  std::vector<double> out(a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    const double* row = a.data + i * a.cols;
    for (std::size_t j = 0; j < a.cols; ++j) s += row[j] * v[j];
    out[i] = b.empty() ? s : s + b[i];
  }
  return out;
}

RealMatrix relu_clamp(const RealMatrix& a) {
  RealMatrix out = a;
  for (double& x : out.entries()) x = x > 0.0 ? x : 0.0;
  return out;
}

RealMatrix relu_clamp_gradient(const RealMatrix& a, const RealMatrix& upstream) {
  if (a.rows() != upstream.rows() || a.cols() != upstream.cols()) {
    throw ShapeError("relu_clamp_gradient: shape mismatch");
  }
  RealMatrix out(a.rows(), a.cols());
  auto src = a.entries();
  auto up = upstream.entries();
  auto dst = out.entries();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] > 0.0 ? up[i] : 0.0;
  return out;
}

GroupMaxResult group_max(std::span<const double> v, std::size_t group_size) {
  if (group_size == 0 || v.empty() || v.size() % group_size != 0) {
    throw StructuralError("group_max: width " + std::to_string(v.size()) +
                          " is not divisible by group size " + std::to_string(group_size));
  }
  const std::size_t groups = v.size() / group_size;
  GroupMaxResult r;
  r.values.resize(groups);
  r.winners.resize(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    std::size_t best = g * group_size;
    for (std::size_t i = best + 1; i < (g + 1) * group_size; ++i) {
      if (v[i] > v[best]) best = i;
    }
    r.values[g] = v[best];
    r.winners[g] = static_cast<std::uint32_t>(best);
  }
  return r;
}

GlobalMaxResult global_max(std::span<const double> v) {
  if (v.empty()) throw ShapeError("global_max: empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return {v[best], static_cast<std::uint32_t>(best)};
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace groupmax
