#include "groupmax/tape.hpp"

#include <cmath>
#include <cstring>
#include <limits>

namespace groupmax {

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw StructuralError("unknown activation '" + name + "' (expected relu, tanh or identity)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

namespace {

using OpKind = Tape::OpKind;

// Shared by recording and replay so both produce identical bits.
void evaluate(const Tape::Op& op, const std::vector<Tape::Op>& ops, const double* params,
              double* values, std::uint32_t* winners) {
  double* out = values + op.offset;
  switch (op.kind) {
    case OpKind::input:
      break;  // value written at record time, never recomputed
    case OpKind::slice: {
      const double* a = values + ops[op.a].offset + op.aux;
      std::memcpy(out, a, op.size * sizeof(double));
      break;
    }
    case OpKind::affine:
    case OpKind::clamped_affine: {
      const bool clamp = op.kind == OpKind::clamped_affine;
      const double* v = values + ops[op.a].offset;
      const double* w = params + op.weight.offset;
      const std::size_t cols = op.weight.cols;
      for (std::size_t i = 0; i < op.size; ++i) {
        const double* row = w + i * cols;
        double s = 0.0;
        if (clamp) {
          for (std::size_t j = 0; j < cols; ++j) s += (row[j] > 0.0 ? row[j] : 0.0) * v[j];
        } else {
          for (std::size_t j = 0; j < cols; ++j) s += row[j] * v[j];
        }
        out[i] = op.bias.empty() ? s : s + params[op.bias.offset + i];
      }
      break;
    }
    case OpKind::scaled_clamped: {
      const double* sc = values + ops[op.a].offset;
      const double* z = values + ops[op.b].offset;
      const double* w = params + op.weight.offset;
      const std::size_t cols = op.weight.cols;
      for (std::size_t i = 0; i < op.size; ++i) {
        const double* row = w + i * cols;
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
          const double p = row[j] * sc[j];
          if (p > 0.0) s += p * z[j];
        }
        out[i] = s;
      }
      break;
    }
    case OpKind::hadamard: {
      const double* a = values + ops[op.a].offset;
      const double* b = values + ops[op.b].offset;
      for (std::size_t i = 0; i < op.size; ++i) out[i] = a[i] * b[i];
      break;
    }
    case OpKind::add: {
      const double* a = values + ops[op.a].offset;
      const double* b = values + ops[op.b].offset;
      for (std::size_t i = 0; i < op.size; ++i) out[i] = a[i] + b[i];
      break;
    }
    case OpKind::relu: {
      const double* a = values + ops[op.a].offset;
      for (std::size_t i = 0; i < op.size; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
      break;
    }
    case OpKind::tanh: {
      const double* a = values + ops[op.a].offset;
      for (std::size_t i = 0; i < op.size; ++i) out[i] = std::tanh(a[i]);
      break;
    }
    case OpKind::group_max:
    case OpKind::global_max: {
      const double* a = values + ops[op.a].offset;
      const std::size_t g = op.kind == OpKind::global_max ? ops[op.a].size : op.aux;
      for (std::size_t k = 0; k < op.size; ++k) {
        std::size_t best = k * g;
        for (std::size_t i = best + 1; i < (k + 1) * g; ++i) {
          if (a[i] > a[best]) best = i;
        }
        out[k] = a[best];
        winners[op.winners + k] = static_cast<std::uint32_t>(best);
      }
      break;
    }
  }
}

}  // namespace

void Tape::reset(std::span<const double> params) {
  params_ = params;
  ops_.clear();
  values_.clear();
  winners_.clear();
}

void Tape::require_params(ParamBlock block, const char* what) const {
  if (!block.empty() && block.offset + block.size() > params_.size()) {
    throw ShapeError(std::string(what) + ": parameter block outside the parameter vector");
  }
}

NodeId Tape::push(OpKind kind, std::size_t size, NodeId a, NodeId b, ParamBlock weight,
                  ParamBlock bias, std::uint32_t aux, bool needs_grad) {
  Op op;
  op.kind = kind;
  op.offset = static_cast<std::uint32_t>(values_.size());
  op.size = static_cast<std::uint32_t>(size);
  op.a = a;
  op.b = b;
  op.weight = weight;
  op.bias = bias;
  op.aux = aux;
  op.needs_grad = needs_grad;
  if (kind == OpKind::group_max || kind == OpKind::global_max) {
    op.winners = static_cast<std::uint32_t>(winners_.size());
    winners_.resize(winners_.size() + size);
  }
  values_.resize(values_.size() + size);
  ops_.push_back(op);
  evaluate(ops_.back(), ops_, params_.data(), values_.data(), winners_.data());
  return static_cast<NodeId>(ops_.size() - 1);
}

NodeId Tape::input(std::span<const double> x) {
  if (x.empty()) throw ShapeError("Tape::input: empty input");
  const NodeId n = push(OpKind::input, x.size(), 0, 0, {}, {}, 0, false);
  std::memcpy(values_.data() + ops_[n].offset, x.data(), x.size() * sizeof(double));
  return n;
}

NodeId Tape::slice(NodeId a, std::size_t offset, std::size_t length) {
  if (length == 0 || offset + length > ops_.at(a).size) throw ShapeError("Tape::slice: out of range");
  return push(OpKind::slice, length, a, 0, {}, {}, static_cast<std::uint32_t>(offset),
              ops_[a].needs_grad);
}

NodeId Tape::affine(ParamBlock weight, ParamBlock bias, NodeId v) {
  require_params(weight, "Tape::affine");
  require_params(bias, "Tape::affine");
  if (weight.cols != ops_.at(v).size) throw ShapeError("Tape::affine: shape mismatch");
  if (!bias.empty() && bias.size() != weight.rows) throw ShapeError("Tape::affine: bias length");
  return push(OpKind::affine, weight.rows, v, 0, weight, bias, 0, true);
}

NodeId Tape::clamped_affine(ParamBlock weight, ParamBlock bias, NodeId v) {
  require_params(weight, "Tape::clamped_affine");
  require_params(bias, "Tape::clamped_affine");
  if (weight.cols != ops_.at(v).size) throw ShapeError("Tape::clamped_affine: shape mismatch");
  if (!bias.empty() && bias.size() != weight.rows) {
    throw ShapeError("Tape::clamped_affine: bias length");
  }
  return push(OpKind::clamped_affine, weight.rows, v, 0, weight, bias, 0, true);
}

NodeId Tape::scaled_clamped(ParamBlock weight, NodeId scale, NodeId z) {
  require_params(weight, "Tape::scaled_clamped");
  if (weight.cols != ops_.at(scale).size || weight.cols != ops_.at(z).size) {
    throw ShapeError("Tape::scaled_clamped: shape mismatch");
  }
  return push(OpKind::scaled_clamped, weight.rows, scale, z, weight, {}, 0, true);
}

NodeId Tape::hadamard(NodeId a, NodeId b) {
  if (ops_.at(a).size != ops_.at(b).size) throw ShapeError("Tape::hadamard: length mismatch");
  return push(OpKind::hadamard, ops_[a].size, a, b, {}, {}, 0,
              ops_[a].needs_grad || ops_[b].needs_grad);
}

NodeId Tape::add(NodeId a, NodeId b) {
  if (ops_.at(a).size != ops_.at(b).size) throw ShapeError("Tape::add: length mismatch");
  return push(OpKind::add, ops_[a].size, a, b, {}, {}, 0,
              ops_[a].needs_grad || ops_[b].needs_grad);
}

NodeId Tape::relu(NodeId a) {
  return push(OpKind::relu, ops_.at(a).size, a, 0, {}, {}, 0, ops_[a].needs_grad);
}

NodeId Tape::tanh(NodeId a) {
  return push(OpKind::tanh, ops_.at(a).size, a, 0, {}, {}, 0, ops_[a].needs_grad);
}

NodeId Tape::activate(Activation act, NodeId a) {
  switch (act) {
    case Activation::relu: return relu(a);
    case Activation::tanh: return tanh(a);
    case Activation::identity: return a;
  }
  return a;
}

NodeId Tape::group_max(NodeId a, std::size_t group_size) {
  const std::size_t m = ops_.at(a).size;
  if (group_size == 0 || m % group_size != 0) {
    throw StructuralError("group_max: width " + std::to_string(m) +
                          " is not divisible by group size " + std::to_string(group_size));
  }
  return push(OpKind::group_max, m / group_size, a, 0, {}, {},
              static_cast<std::uint32_t>(group_size), ops_[a].needs_grad);
}

NodeId Tape::global_max(NodeId a) {
  return push(OpKind::global_max, 1, a, 0, {}, {}, 0, ops_.at(a).needs_grad);
}

double Tape::output() const {
  if (!scalar_terminated()) throw UsageError("Tape::output: tape is not scalar-terminated");
  return values_[ops_.back().offset];
}

void Tape::backward(double seed, std::span<double> param_grad, bool input_gradient) {
  if (!scalar_terminated()) throw UsageError("Tape::backward: tape is not scalar-terminated");
  if (param_grad.size() != params_.size()) {
    throw ShapeError("Tape::backward: gradient buffer length " + std::to_string(param_grad.size()) +
                     " != parameter count " + std::to_string(params_.size()));
  }
  adjoints_.assign(values_.size(), 0.0);
  adjoints_[ops_.back().offset] = seed;
  const double* params = params_.data();
  double* grad = param_grad.data();
  const auto wants = [&](NodeId n) { return input_gradient || ops_[n].needs_grad; };

  for (std::size_t idx = ops_.size(); idx-- > 0;) {
    const Op& op = ops_[idx];
    const double* g = adjoints_.data() + op.offset;
    switch (op.kind) {
      case OpKind::input:
        break;
      case OpKind::slice: {
        if (!wants(op.a)) break;
        double* ga = adjoints_.data() + ops_[op.a].offset + op.aux;
        for (std::size_t i = 0; i < op.size; ++i) ga[i] += g[i];
        break;
      }
      case OpKind::affine:
      case OpKind::clamped_affine: {
        const bool clamp = op.kind == OpKind::clamped_affine;
        const bool prop = wants(op.a);
        const double* v = values_.data() + ops_[op.a].offset;
        double* gv = adjoints_.data() + ops_[op.a].offset;
        const double* w = params + op.weight.offset;
        double* gw = grad + op.weight.offset;
        const std::size_t cols = op.weight.cols;
        for (std::size_t i = 0; i < op.size; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          const double* row = w + i * cols;
          double* grow = gw + i * cols;
          if (clamp) {
            for (std::size_t j = 0; j < cols; ++j) {
              if (row[j] > 0.0) {
                grow[j] += gi * v[j];
                if (prop) gv[j] += row[j] * gi;
              }
            }
          } else {
            for (std::size_t j = 0; j < cols; ++j) grow[j] += gi * v[j];
            if (prop) {
              for (std::size_t j = 0; j < cols; ++j) gv[j] += row[j] * gi;
            }
          }
          if (!op.bias.empty()) grad[op.bias.offset + i] += gi;
        }
        break;
      }
      case OpKind::scaled_clamped: {
        const bool prop_s = wants(op.a);
        const bool prop_z = wants(op.b);
        const double* sc = values_.data() + ops_[op.a].offset;
        const double* z = values_.data() + ops_[op.b].offset;
        double* gs = adjoints_.data() + ops_[op.a].offset;
        double* gz = adjoints_.data() + ops_[op.b].offset;
        const double* w = params + op.weight.offset;
        double* gw = grad + op.weight.offset;
        const std::size_t cols = op.weight.cols;
        for (std::size_t i = 0; i < op.size; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          const double* row = w + i * cols;
          double* grow = gw + i * cols;
          for (std::size_t j = 0; j < cols; ++j) {
            const double p = row[j] * sc[j];
            if (p > 0.0) {
              grow[j] += gi * sc[j] * z[j];
              if (prop_s) gs[j] += gi * row[j] * z[j];
              if (prop_z) gz[j] += gi * p;
            }
          }
        }
        break;
      }
      case OpKind::hadamard: {
        const double* a = values_.data() + ops_[op.a].offset;
        const double* b = values_.data() + ops_[op.b].offset;
        if (wants(op.a)) {
          double* ga = adjoints_.data() + ops_[op.a].offset;
          for (std::size_t i = 0; i < op.size; ++i) ga[i] += g[i] * b[i];
        }
        if (wants(op.b)) {
          double* gb = adjoints_.data() + ops_[op.b].offset;
          for (std::size_t i = 0; i < op.size; ++i) gb[i] += g[i] * a[i];
        }
        break;
      }
      case OpKind::add: {
        if (wants(op.a)) {
          double* ga = adjoints_.data() + ops_[op.a].offset;
          for (std::size_t i = 0; i < op.size; ++i) ga[i] += g[i];
        }
        if (wants(op.b)) {
          double* gb = adjoints_.data() + ops_[op.b].offset;
          for (std::size_t i = 0; i < op.size; ++i) gb[i] += g[i];
        }
        break;
      }
      case OpKind::relu: {
        if (!wants(op.a)) break;
        const double* a = values_.data() + ops_[op.a].offset;
        double* ga = adjoints_.data() + ops_[op.a].offset;
        for (std::size_t i = 0; i < op.size; ++i) {
          if (a[i] > 0.0) ga[i] += g[i];
        }
        break;
      }
      case OpKind::tanh: {
        if (!wants(op.a)) break;
        const double* t = values_.data() + op.offset;
        double* ga = adjoints_.data() + ops_[op.a].offset;
        for (std::size_t i = 0; i < op.size; ++i) ga[i] += g[i] * (1.0 - t[i] * t[i]);
        break;
      }
      case OpKind::group_max:
      case OpKind::global_max: {
        if (!wants(op.a)) break;
        double* ga = adjoints_.data() + ops_[op.a].offset;
        for (std::size_t k = 0; k < op.size; ++k) ga[winners_[op.winners + k]] += g[k];
        break;
      }
    }
  }
}

std::vector<double> Tape::replay_values() const {
  std::vector<double> values(values_.size());
  std::vector<std::uint32_t> winners(winners_.size());
  for (const Op& op : ops_) {
    if (op.kind == OpKind::input) {
      std::memcpy(values.data() + op.offset, values_.data() + op.offset, op.size * sizeof(double));
    } else {
      evaluate(op, ops_, params_.data(), values.data(), winners.data());
    }
  }
  return values;
}

double Tape::replay() const {
  if (!scalar_terminated()) throw UsageError("Tape::replay: tape is not scalar-terminated");
  return replay_values()[ops_.back().offset];
}

std::span<const std::uint32_t> Tape::winners(NodeId n) const {
  const Op& op = ops_.at(n);
  if (op.kind != OpKind::group_max && op.kind != OpKind::global_max) {
    throw UsageError("Tape::winners: node is not a max op");
  }
  return {winners_.data() + op.winners, op.size};
}

std::vector<NodeId> Tape::max_nodes() const {
  std::vector<NodeId> out;
  for (NodeId n = 0; n < ops_.size(); ++n) {
    if (ops_[n].kind == OpKind::group_max || ops_[n].kind == OpKind::global_max) out.push_back(n);
  }
  return out;
}

double Tape::tie_gap() const {
  double gap = std::numeric_limits<double>::infinity();
  for (const Op& op : ops_) {
    switch (op.kind) {
      case OpKind::group_max:
      case OpKind::global_max: {
        const double* a = values_.data() + ops_[op.a].offset;
        const std::size_t g = op.kind == OpKind::global_max ? ops_[op.a].size : op.aux;
        for (std::size_t k = 0; k < op.size; ++k) {
          const std::uint32_t w = winners_[op.winners + k];
          for (std::size_t i = k * g; i < (k + 1) * g; ++i) {
            if (i != w) gap = std::min(gap, a[w] - a[i]);
          }
        }
        break;
      }
      case OpKind::relu: {
        const double* a = values_.data() + ops_[op.a].offset;
        for (std::size_t i = 0; i < op.size; ++i) gap = std::min(gap, std::abs(a[i]));
        break;
      }
      case OpKind::clamped_affine: {
        const double* w = params_.data() + op.weight.offset;
        for (std::size_t i = 0; i < op.weight.size(); ++i) gap = std::min(gap, std::abs(w[i]));
        break;
      }
      case OpKind::scaled_clamped: {
        const double* sc = values_.data() + ops_[op.a].offset;
        const double* w = params_.data() + op.weight.offset;
        for (std::size_t i = 0; i < op.weight.rows; ++i)
          for (std::size_t j = 0; j < op.weight.cols; ++j)
            gap = std::min(gap, std::abs(w[i * op.weight.cols + j] * sc[j]));
        break;
      }
      default:
        break;
    }
  }
  return gap;
}

std::uint64_t Tape::pattern_signature() const {
  std::uint64_t h = 1469598103934665603ULL;
  const auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  for (const Op& op : ops_) {
    switch (op.kind) {
      case OpKind::group_max:
      case OpKind::global_max:
        for (std::size_t k = 0; k < op.size; ++k) mix(winners_[op.winners + k]);
        break;
      case OpKind::relu: {
        const double* a = values_.data() + ops_[op.a].offset;
        for (std::size_t i = 0; i < op.size; ++i) mix(a[i] > 0.0);
        break;
      }
      case OpKind::clamped_affine: {
        const double* w = params_.data() + op.weight.offset;
        for (std::size_t i = 0; i < op.weight.size(); ++i) mix(w[i] > 0.0);
        break;
      }
      case OpKind::scaled_clamped: {
        const double* sc = values_.data() + ops_[op.a].offset;
        const double* w = params_.data() + op.weight.offset;
        for (std::size_t i = 0; i < op.weight.rows; ++i)
          for (std::size_t j = 0; j < op.weight.cols; ++j)
            mix(w[i * op.weight.cols + j] * sc[j] > 0.0);
        break;
      }
      default:
        break;
    }
  }
  return h;
}

}  // namespace groupmax
