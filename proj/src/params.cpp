#include "groupmax/params.hpp"

#include <cmath>

namespace groupmax {

ParamBlock ParamStore::add(std::string name, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw ShapeError("ParamStore::add: empty block " + name);
  ParamBlock b{static_cast<std::uint32_t>(values_.size()), static_cast<std::uint32_t>(rows),
               static_cast<std::uint32_t>(cols)};
  values_.resize(values_.size() + rows * cols, 0.0);
  blocks_.push_back({std::move(name), b});
  return b;
}

const NamedBlock* ParamStore::find(const std::string& name) const {
  for (const auto& nb : blocks_) {
    if (nb.name == name) return &nb;
  }
  return nullptr;
}

void ParamStore::fill(ParamBlock b, double v) {
  for (double& x : span(b)) x = v;
}

void ParamStore::fill_uniform(ParamBlock b, double lo, double hi, Rng& rng) {
  for (double& x : span(b)) x = rng.uniform(lo, hi);
}

void ParamStore::fill_glorot(ParamBlock b, Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
  fill_uniform(b, -s, s, rng);
}

void ParamStore::fill_glorot_nonnegative(ParamBlock b, Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
  fill_uniform(b, 0.0, s, rng);
}

}  // namespace groupmax
