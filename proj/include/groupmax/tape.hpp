#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "groupmax/errors.hpp"
#include "groupmax/linalg.hpp"

namespace groupmax {

/// Location of a weight matrix or bias vector inside a flat parameter vector.
/// A bias is stored as a rows x 1 block. rows == 0 marks "absent".
struct ParamBlock {
  std::uint32_t offset = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;

  std::size_t size() const { return std::size_t{rows} * cols; }
  bool empty() const { return rows == 0; }
  friend bool operator==(const ParamBlock&, const ParamBlock&) = default;
};

using NodeId = std::uint32_t;

enum class Activation : std::uint8_t { relu, tanh, identity };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// Record of one forward pass over the fixed primitive set the networks use.
///
/// Every op produces one node; node ids are op indices. Parameters are read
/// from the span given to reset(), which must outlive the tape's use. The
/// max ops keep their argmax winners (lowest index on ties) so the backward
/// sweep and cut extraction follow exactly the branch taken forward.
class Tape {
 public:
  enum class OpKind : std::uint8_t {
    input,
    slice,
    affine,          // W v + b
    clamped_affine,  // max(W,0) v + b
    scaled_clamped,  // out_i = sum_j max(W_ij s_j, 0) z_j
    hadamard,
    add,
    relu,
    tanh,
    group_max,
    global_max,
  };

  struct Op {
    OpKind kind;
    std::uint32_t offset;  // into values
    std::uint32_t size;
    NodeId a = 0;
    NodeId b = 0;
    ParamBlock weight;
    ParamBlock bias;
    std::uint32_t aux = 0;      // slice offset or group size
    std::uint32_t winners = 0;  // into winners_ for max ops
    bool needs_grad = false;    // depends on parameters
  };

  Tape() = default;
  explicit Tape(std::span<const double> params) { reset(params); }

  /// Clears the record, keeping allocated capacity.
  void reset(std::span<const double> params);

  NodeId input(std::span<const double> x);
  NodeId slice(NodeId a, std::size_t offset, std::size_t length);
  NodeId affine(ParamBlock weight, ParamBlock bias, NodeId v);
  NodeId clamped_affine(ParamBlock weight, ParamBlock bias, NodeId v);
  NodeId scaled_clamped(ParamBlock weight, NodeId scale, NodeId z);
  NodeId hadamard(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId relu(NodeId a);
  NodeId tanh(NodeId a);
  NodeId activate(Activation act, NodeId a);
  NodeId group_max(NodeId a, std::size_t group_size);
  NodeId global_max(NodeId a);

  std::size_t size() const { return ops_.size(); }
  const Op& op(NodeId n) const { return ops_[n]; }
  std::span<const double> value(NodeId n) const {
    return {values_.data() + ops_[n].offset, ops_[n].size};
  }
  bool scalar_terminated() const { return !ops_.empty() && ops_.back().size == 1; }
  /// Value of the final scalar node. Throws UsageError if not scalar-terminated.
  double output() const;

  /// Reverse sweep. Parameter gradients are accumulated (+=) into
  /// param_grad, which must be as long as the parameter span. When
  /// input_gradient is set, adjoints of parameter-free nodes are filled too.
  void backward(double seed, std::span<double> param_grad, bool input_gradient = false);
  /// Adjoint of a node after the last backward().
  std::span<const double> adjoint(NodeId n) const {
    return {adjoints_.data() + ops_[n].offset, ops_[n].size};
  }

  /// Recomputes every node from the recorded ops and current parameters.
  std::vector<double> replay_values() const;
  double replay() const;

  /// Winners of a group_max/global_max node.
  std::span<const std::uint32_t> winners(NodeId n) const;
  /// Max nodes in recording order.
  std::vector<NodeId> max_nodes() const;

  /// Smallest margin of any discrete choice in the pass: runner-up gaps in
  /// max ops, |pre-activation| at relus, |W_ij| of clamped weights and
  /// |W_ij s_j| of scaled clamps.
  double tie_gap() const;
  /// Hash of every discrete choice; equal signatures mean the same affine piece.
  std::uint64_t pattern_signature() const;

 private:
  NodeId push(OpKind kind, std::size_t size, NodeId a, NodeId b, ParamBlock weight,
              ParamBlock bias, std::uint32_t aux, bool needs_grad);
  void require_params(ParamBlock block, const char* what) const;

  std::span<const double> params_;
  std::vector<Op> ops_;
  std::vector<double> values_;
  std::vector<double> adjoints_;
  std::vector<std::uint32_t> winners_;
};

}  // namespace groupmax
