#pragma once

#include <span>
#include <string>
#include <vector>

#include "groupmax/linalg.hpp"
#include "groupmax/random.hpp"
#include "groupmax/tape.hpp"

namespace groupmax {

struct NamedBlock {
  std::string name;
  ParamBlock block;
};

/// Flat parameter vector partitioned into named row-major blocks. The
/// optimizer sees one contiguous span; networks address it per block.
class ParamStore {
 public:
  ParamBlock add(std::string name, std::size_t rows, std::size_t cols);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const std::vector<NamedBlock>& blocks() const { return blocks_; }
  const NamedBlock* find(const std::string& name) const;

  MatrixView matrix(ParamBlock b) const { return {values_.data() + b.offset, b.rows, b.cols}; }
  MutableMatrixView matrix(ParamBlock b) { return {values_.data() + b.offset, b.rows, b.cols}; }
  std::span<const double> span(ParamBlock b) const { return {values_.data() + b.offset, b.size()}; }
  std::span<double> span(ParamBlock b) { return {values_.data() + b.offset, b.size()}; }

  void fill(ParamBlock b, double v);
  void fill_uniform(ParamBlock b, double lo, double hi, Rng& rng);
  /// Uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)).
  void fill_glorot(ParamBlock b, Rng& rng);
  /// Uniform(0, s), same s; for weights that pass through a clamp.
  void fill_glorot_nonnegative(ParamBlock b, Rng& rng);

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    return a.values_ == b.values_;
  }

 private:
  std::vector<double> values_;
  std::vector<NamedBlock> blocks_;
};

}  // namespace groupmax
