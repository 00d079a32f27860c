#pragma once

#include <concepts>
#include <span>
#include <string>
#include <variant>

#include "groupmax/networks.hpp"

namespace groupmax {

enum class ModelKind { groupmax, partial_groupmax, max_affine, icnn, partial_icnn, mlp };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& name);

/// Any of the supported architectures behind one interface.
class Model {
 public:
  using Variant =
      std::variant<GroupMaxNet, PartialGroupMaxNet, MaxAffineNet, IcnnNet, PartialIcnnNet, MlpNet>;

  template <class Net>
    requires(!std::same_as<std::decay_t<Net>, Model>)
  Model(Net net) : net_(std::move(net)) {}

  ModelKind kind() const;
  std::size_t input_dim() const;
  /// Trailing input coordinates the model is convex in: all of them for the
  /// fully convex nets, k for the partial ones, 0 for the MLP.
  std::size_t convex_dim() const;
  bool partial() const {
    return kind() == ModelKind::partial_groupmax || kind() == ModelKind::partial_icnn;
  }

  const ParamStore& params() const;
  ParamStore& params();
  std::span<const double> parameters() const { return params().values(); }
  std::span<double> parameters() { return params().values(); }

  double forward(std::span<const double> x, Tape& tape) const;
  /// Forward without keeping the tape.
  double evaluate(std::span<const double> x) const;

  const Variant& variant() const { return net_; }
  template <class Net>
  const Net* get_if() const {
    return std::get_if<Net>(&net_);
  }
  template <class Net>
  Net* get_if() {
    return std::get_if<Net>(&net_);
  }

 private:
  Variant net_;
};

}  // namespace groupmax
