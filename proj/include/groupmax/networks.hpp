#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "groupmax/params.hpp"
#include "groupmax/tape.hpp"

namespace groupmax {

/// Fully convex GroupMax network.
///
///   z^1 = rho(A^1 x + B^1)
///   z^j = rho(max(A^j,0) z^{j-1} + B^j),   1 < j < q
///   h   = max_i (max(A^q,0) z^{q-1} + B^q)_i
///
/// rho takes the max over contiguous groups of group_size entries, so layer
/// j hands K_j = M_j / G values to the next one. Only layers followed by rho
/// need M_j divisible by G. With q = 1 the net is h = max_i (A^1 x + B^1)_i.
class GroupMaxNet {
 public:
  /// Weights feeding a clamp start nonnegative so no unit is dead at step 0.
  static GroupMaxNet build(std::size_t input_dim, std::vector<std::size_t> widths,
                           std::size_t group_size, std::uint64_t seed);
  /// Same shape, every parameter zero.
  static GroupMaxNet zeros(std::size_t input_dim, std::vector<std::size_t> widths,
                           std::size_t group_size);
  static std::size_t parameter_count(std::size_t input_dim, const std::vector<std::size_t>& widths,
                                     std::size_t group_size);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t layer_count() const { return widths_.size(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t group_size() const { return group_size_; }
  /// Number of groups K_j of layer j (0-based), i.e. M_j / G.
  std::size_t groups(std::size_t layer) const { return widths_[layer] / group_size_; }

  ParamBlock weight(std::size_t layer) const { return weights_[layer]; }
  ParamBlock bias(std::size_t layer) const { return biases_[layer]; }

  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  double forward(std::span<const double> x, Tape& tape) const;

 private:
  GroupMaxNet(std::size_t input_dim, std::vector<std::size_t> widths, std::size_t group_size);

  std::size_t input_dim_;
  std::vector<std::size_t> widths_;
  std::size_t group_size_;
  ParamStore params_;
  std::vector<ParamBlock> weights_;
  std::vector<ParamBlock> biases_;
};

/// Single layer of cuts: h(x) = max_i (A_i . x + b_i).
class MaxAffineNet {
 public:
  static MaxAffineNet build(std::size_t input_dim, std::size_t cuts, std::uint64_t seed);
  static MaxAffineNet zeros(std::size_t input_dim, std::size_t cuts);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t cut_count() const { return cuts_; }
  ParamBlock slopes() const { return slopes_; }
  ParamBlock intercepts() const { return intercepts_; }

  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  double forward(std::span<const double> x, Tape& tape) const;

 private:
  MaxAffineNet(std::size_t input_dim, std::size_t cuts);

  std::size_t input_dim_;
  std::size_t cuts_;
  ParamStore params_;
  ParamBlock slopes_;
  ParamBlock intercepts_;
};

/// Weight families of one layer of the partially convex recursion. Absent
/// families (z-path on the first layer, where z_0 = 0; feedforward path on
/// the last layer, whose output is never used) have rows == 0.
struct PartialLayer {
  ParamBlock ff_weight;  // W~_i: u_{i-1} -> u_i
  ParamBlock ff_bias;    // b~_i
  ParamBlock z_weight;   // W^(z)_i, passes through the clamp
  ParamBlock zu_weight;  // W^(zu)_i
  ParamBlock z_bias;     // b^(z)_i
  ParamBlock y_weight;   // W^(y)_i
  ParamBlock yu_weight;  // W^(yu)_i
  ParamBlock y_bias;     // b^(y)_i
  ParamBlock u_weight;   // W^(u)_i
  ParamBlock bias;       // b_i
};

/// Shape of a partially convex net: input x = (x~, y), convex in y only.
struct PartialShape {
  std::size_t input_dim = 0;   // d
  std::size_t convex_dim = 0;  // k, y is the trailing k coordinates
  std::size_t ff_width = 0;    // m_x
  std::size_t convex_width = 0;  // m_y
  std::size_t layers = 0;        // q
  Activation ff_activation = Activation::relu;

  std::size_t nonconvex_dim() const { return input_dim - convex_dim; }
};

/// GroupMax network convex in y with cuts conditional on x~:
///
///   u_0 = x~, z_0 = 0
///   u_i = act(W~_i u_{i-1} + b~_i)
///   pre_i = [W^(z)_i (x) (W^(zu)_i u_{i-1} + b^(z)_i)]^+ z_{i-1}
///         + W^(y)_i (y o (W^(yu)_i u_{i-1} + b^(y)_i)) + W^(u)_i u_{i-1} + b_i
///   z_i = rho(pre_i) for i < q,  h = max_l (pre_q)_l
///
/// where (A (x) c)_ij = A_ij c_j and o is the Hadamard product.
class PartialGroupMaxNet {
 public:
  static PartialGroupMaxNet build(const PartialShape& shape, std::size_t group_size,
                                  std::uint64_t seed);
  static PartialGroupMaxNet zeros(const PartialShape& shape, std::size_t group_size);

  const PartialShape& shape() const { return shape_; }
  std::size_t input_dim() const { return shape_.input_dim; }
  std::size_t convex_dim() const { return shape_.convex_dim; }
  std::size_t layer_count() const { return shape_.layers; }
  std::size_t group_size() const { return group_size_; }
  std::size_t groups() const { return shape_.convex_width / group_size_; }
  const PartialLayer& layer(std::size_t i) const { return layers_[i]; }

  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  /// x is the concatenation (x~, y).
  double forward(std::span<const double> x, Tape& tape) const;
  double forward(std::span<const double> x_tilde, std::span<const double> y, Tape& tape) const;

 private:
  PartialGroupMaxNet(const PartialShape& shape, std::size_t group_size);

  PartialShape shape_;
  std::size_t group_size_;
  ParamStore params_;
  std::vector<PartialLayer> layers_;
};

/// Fully input-convex baseline:
///   z_1 = relu(W^x_0 x + b_0)
///   z_{l+1} = relu(max(W^z_l,0) z_l + W^x_l x + b_l)
///   h = max(W^z_L,0) z_L + W^x_L x + b_L
class IcnnNet {
 public:
  static IcnnNet build(std::size_t input_dim, std::vector<std::size_t> hidden, std::uint64_t seed);
  static IcnnNet zeros(std::size_t input_dim, std::vector<std::size_t> hidden);

  std::size_t input_dim() const { return input_dim_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }
  /// Layer l in 0..hidden.size(); layer 0 has no z weight.
  ParamBlock z_weight(std::size_t l) const { return z_weights_[l]; }
  ParamBlock x_weight(std::size_t l) const { return x_weights_[l]; }
  ParamBlock bias(std::size_t l) const { return biases_[l]; }

  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  double forward(std::span<const double> x, Tape& tape) const;

 private:
  IcnnNet(std::size_t input_dim, std::vector<std::size_t> hidden);

  std::size_t input_dim_;
  std::vector<std::size_t> hidden_;
  ParamStore params_;
  std::vector<ParamBlock> z_weights_;
  std::vector<ParamBlock> x_weights_;
  std::vector<ParamBlock> biases_;
};

/// Partially input-convex baseline: the recursion of PartialGroupMaxNet with
/// componentwise relu in place of the group max on hidden layers
/// (shape.layers - 1 of them, width m_y) and a scalar linear readout.
class PartialIcnnNet {
 public:
  static PartialIcnnNet build(const PartialShape& shape, std::uint64_t seed);
  static PartialIcnnNet zeros(const PartialShape& shape);

  const PartialShape& shape() const { return shape_; }
  std::size_t input_dim() const { return shape_.input_dim; }
  std::size_t convex_dim() const { return shape_.convex_dim; }
  const PartialLayer& layer(std::size_t i) const { return layers_[i]; }

  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  double forward(std::span<const double> x, Tape& tape) const;

 private:
  explicit PartialIcnnNet(const PartialShape& shape);

  PartialShape shape_;
  ParamStore params_;
  std::vector<PartialLayer> layers_;
};

/// Plain dense feedforward baseline with a linear scalar output.
class MlpNet {
 public:
  static MlpNet build(std::size_t input_dim, std::vector<std::size_t> hidden,
                      Activation activation, std::uint64_t seed);
  static MlpNet zeros(std::size_t input_dim, std::vector<std::size_t> hidden,
                      Activation activation);

  std::size_t input_dim() const { return input_dim_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }
  Activation activation() const { return activation_; }
  ParamBlock weight(std::size_t l) const { return weights_[l]; }
  ParamBlock bias(std::size_t l) const { return biases_[l]; }

  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  double forward(std::span<const double> x, Tape& tape) const;

 private:
  MlpNet(std::size_t input_dim, std::vector<std::size_t> hidden, Activation activation);

  std::size_t input_dim_;
  std::vector<std::size_t> hidden_;
  Activation activation_;
  ParamStore params_;
  std::vector<ParamBlock> weights_;
  std::vector<ParamBlock> biases_;
};

}  // namespace groupmax
