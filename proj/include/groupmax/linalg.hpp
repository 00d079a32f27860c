#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "groupmax/errors.hpp"

namespace groupmax {

/// Non-owning row-major view of a dense matrix.
struct MatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {data + i * cols, cols}; }
  std::size_t size() const { return rows * cols; }
};

struct MutableMatrixView {
  double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<double> row(std::size_t i) const { return {data + i * cols, cols}; }
  operator MatrixView() const { return {data, rows, cols}; }
};

/// Dense real matrix, row-major, 64-bit entries.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Throws ShapeError if entries.size() != rows*cols or a dimension is zero.
  RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static RealMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static RealMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return entries_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  std::span<const double> entries() const { return entries_; }
  std::span<double> entries() { return entries_; }
  std::span<const double> row(std::size_t i) const { return {entries_.data() + i * cols_, cols_}; }

  MatrixView view() const { return {entries_.data(), rows_, cols_}; }
  MutableMatrixView mutable_view() { return {entries_.data(), rows_, cols_}; }
  operator MatrixView() const { return view(); }

  RealMatrix transposed() const;

  friend bool operator==(const RealMatrix&, const RealMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

/// A v + b. An empty b means no bias.
std::vector<double> affine(MatrixView a, std::span<const double> b, std::span<const double> v);

/// Entrywise max(a_ij, 0).
RealMatrix relu_clamp(const RealMatrix& a);

/// Pullback of relu_clamp: upstream_ij where a_ij > 0, else 0.
RealMatrix relu_clamp_gradient(const RealMatrix& a, const RealMatrix& upstream);

struct GroupMaxResult {
  std::vector<double> values;
  std::vector<std::uint32_t> winners;  // global indices into the input
};

/// Max over contiguous blocks of group_size entries. Ties go to the lowest index.
GroupMaxResult group_max(std::span<const double> v, std::size_t group_size);

struct GlobalMaxResult {
  double value;
  std::uint32_t winner;
};

GlobalMaxResult global_max(std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace groupmax
