#include "groupmax/networks.hpp"

#include <string>

namespace groupmax {

namespace {

std::string layer_name(std::size_t i, const char* what) {
  return "layer" + std::to_string(i + 1) + "." + what;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw StructuralError(what);
}

void validate_partial(const PartialShape& s) {
  require(s.convex_dim >= 1, "partial net: convex input dimension k must be >= 1");
  require(s.input_dim > s.convex_dim, "partial net: input dimension d must exceed k");
  require(s.ff_width >= 1, "partial net: m_x must be >= 1");
  require(s.convex_width >= 1, "partial net: m_y must be >= 1");
  require(s.layers >= 1, "partial net: at least one layer required");
}

// out_widths[i] = M_i, in_widths[i] = width of z_{i-1} (unused for i = 0).
std::vector<PartialLayer> add_partial_layers(ParamStore& ps, const PartialShape& s,
                                             const std::vector<std::size_t>& out_widths,
                                             const std::vector<std::size_t>& in_widths) {
  std::vector<PartialLayer> layers(s.layers);
  for (std::size_t i = 0; i < s.layers; ++i) {
    PartialLayer& L = layers[i];
    const std::size_t in_u = i == 0 ? s.nonconvex_dim() : s.ff_width;
    if (i + 1 < s.layers) {
      L.ff_weight = ps.add(layer_name(i, "ff_weight"), s.ff_width, in_u);
      L.ff_bias = ps.add(layer_name(i, "ff_bias"), s.ff_width, 1);
    }
    if (i > 0) {
      L.z_weight = ps.add(layer_name(i, "z_weight"), out_widths[i], in_widths[i]);
      L.zu_weight = ps.add(layer_name(i, "zu_weight"), in_widths[i], in_u);
      L.z_bias = ps.add(layer_name(i, "z_bias"), in_widths[i], 1);
    }
    L.y_weight = ps.add(layer_name(i, "y_weight"), out_widths[i], s.convex_dim);
    L.yu_weight = ps.add(layer_name(i, "yu_weight"), s.convex_dim, in_u);
    L.y_bias = ps.add(layer_name(i, "y_bias"), s.convex_dim, 1);
    L.u_weight = ps.add(layer_name(i, "u_weight"), out_widths[i], in_u);
    L.bias = ps.add(layer_name(i, "bias"), out_widths[i], 1);
  }
  return layers;
}

void init_partial_layers(ParamStore& ps, const std::vector<PartialLayer>& layers, Rng& rng) {
  for (const PartialLayer& L : layers) {
    if (!L.ff_weight.empty()) ps.fill_glorot(L.ff_weight, rng);
    if (!L.z_weight.empty()) {
      ps.fill_glorot_nonnegative(L.z_weight, rng);
      ps.fill_glorot(L.zu_weight, rng);
      ps.fill(L.z_bias, 1.0);
    }
    ps.fill_glorot(L.y_weight, rng);
    ps.fill_glorot(L.yu_weight, rng);
    ps.fill(L.y_bias, 1.0);
    ps.fill_glorot(L.u_weight, rng);
  }
}

// Records the shared recursion; head(i, pre) turns layer i's pre-activation
// into z_i (or the scalar output on the last layer).
template <class Head>
double partial_forward(const ParamStore& ps, const PartialShape& s,
                       const std::vector<PartialLayer>& layers, std::span<const double> x,
                       Tape& tape, Head head) {
  if (x.size() != s.input_dim) {
    throw ShapeError("partial forward: input has " + std::to_string(x.size()) +
                     " entries, expected " + std::to_string(s.input_dim));
  }
  tape.reset(ps.values());
  const NodeId in = tape.input(x);
  NodeId u = tape.slice(in, 0, s.nonconvex_dim());
  const NodeId y = tape.slice(in, s.nonconvex_dim(), s.convex_dim);
  NodeId z = 0;
  for (std::size_t i = 0; i < s.layers; ++i) {
    const PartialLayer& L = layers[i];
    NodeId pre = tape.affine(L.u_weight, L.bias, u);
    const NodeId gate_y = tape.affine(L.yu_weight, L.y_bias, u);
    pre = tape.add(pre, tape.affine(L.y_weight, {}, tape.hadamard(y, gate_y)));
    if (i > 0) {
      const NodeId gate_z = tape.affine(L.zu_weight, L.z_bias, u);
      pre = tape.add(pre, tape.scaled_clamped(L.z_weight, gate_z, z));
    }
    z = head(i, pre);
    if (i + 1 < s.layers) u = tape.activate(s.ff_activation, tape.affine(L.ff_weight, L.ff_bias, u));
  }
  return tape.output();
}

}  // namespace

// ---------------------------------------------------------------- GroupMaxNet

GroupMaxNet::GroupMaxNet(std::size_t input_dim, std::vector<std::size_t> widths,
                         std::size_t group_size)
    : input_dim_(input_dim), widths_(std::move(widths)), group_size_(group_size) {
  require(input_dim_ >= 1, "GroupMaxNet: input dimension must be >= 1");
  require(!widths_.empty(), "GroupMaxNet: at least one layer required");
  require(group_size_ >= 1, "GroupMaxNet: group size must be >= 1");
  for (std::size_t j = 0; j < widths_.size(); ++j) {
    require(widths_[j] >= 1, "GroupMaxNet: layer widths must be >= 1");
    if (j + 1 < widths_.size() && widths_[j] % group_size_ != 0) {
      throw StructuralError("GroupMaxNet: width M_" + std::to_string(j + 1) + " = " +
                            std::to_string(widths_[j]) + " is not divisible by group size G = " +
                            std::to_string(group_size_));
    }
  }
  for (std::size_t j = 0; j < widths_.size(); ++j) {
    const std::size_t in = j == 0 ? input_dim_ : widths_[j - 1] / group_size_;
    weights_.push_back(params_.add("A" + std::to_string(j + 1), widths_[j], in));
    biases_.push_back(params_.add("B" + std::to_string(j + 1), widths_[j], 1));
  }
}

GroupMaxNet GroupMaxNet::zeros(std::size_t input_dim, std::vector<std::size_t> widths,
                               std::size_t group_size) {
  return GroupMaxNet(input_dim, std::move(widths), group_size);
}

GroupMaxNet GroupMaxNet::build(std::size_t input_dim, std::vector<std::size_t> widths,
                               std::size_t group_size, std::uint64_t seed) {
  GroupMaxNet net(input_dim, std::move(widths), group_size);
  Rng rng(mix_seed(seed, 1));
  net.params_.fill_glorot(net.weights_[0], rng);
  for (std::size_t j = 1; j < net.widths_.size(); ++j) {
    net.params_.fill_glorot_nonnegative(net.weights_[j], rng);
  }
  return net;
}

std::size_t GroupMaxNet::parameter_count(std::size_t input_dim,
                                         const std::vector<std::size_t>& widths,
                                         std::size_t group_size) {
  std::size_t n = widths.at(0) * (input_dim + 1);
  for (std::size_t j = 1; j < widths.size(); ++j) n += widths[j] * (widths[j - 1] / group_size + 1);
  return n;
}

double GroupMaxNet::forward(std::span<const double> x, Tape& tape) const {
  if (x.size() != input_dim_) {
    throw ShapeError("GroupMaxNet: input has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(input_dim_));
  }
  tape.reset(params_.values());
  NodeId h = tape.input(x);
  const std::size_t q = widths_.size();
  for (std::size_t j = 0; j < q; ++j) {
    h = j == 0 ? tape.affine(weights_[0], biases_[0], h)
               : tape.clamped_affine(weights_[j], biases_[j], h);
    h = j + 1 < q ? tape.group_max(h, group_size_) : tape.global_max(h);
  }
  return tape.output();
}

// --------------------------------------------------------------- MaxAffineNet

MaxAffineNet::MaxAffineNet(std::size_t input_dim, std::size_t cuts)
    : input_dim_(input_dim), cuts_(cuts) {
  require(input_dim_ >= 1, "MaxAffineNet: input dimension must be >= 1");
  require(cuts_ >= 1, "MaxAffineNet: at least one cut required");
  slopes_ = params_.add("A", cuts_, input_dim_);
  intercepts_ = params_.add("b", cuts_, 1);
}

MaxAffineNet MaxAffineNet::zeros(std::size_t input_dim, std::size_t cuts) {
  return MaxAffineNet(input_dim, cuts);
}

MaxAffineNet MaxAffineNet::build(std::size_t input_dim, std::size_t cuts, std::uint64_t seed) {
  MaxAffineNet net(input_dim, cuts);
  Rng rng(mix_seed(seed, 1));
  net.params_.fill_glorot(net.slopes_, rng);
  net.params_.fill_uniform(net.intercepts_, -1.0, 1.0, rng);
  return net;
}

double MaxAffineNet::forward(std::span<const double> x, Tape& tape) const {
  if (x.size() != input_dim_) throw ShapeError("MaxAffineNet: input dimension mismatch");
  tape.reset(params_.values());
  const NodeId in = tape.input(x);
  tape.global_max(tape.affine(slopes_, intercepts_, in));
  return tape.output();
}

// --------------------------------------------------------- PartialGroupMaxNet

PartialGroupMaxNet::PartialGroupMaxNet(const PartialShape& shape, std::size_t group_size)
    : shape_(shape), group_size_(group_size) {
  validate_partial(shape_);
  require(group_size_ >= 1, "PartialGroupMaxNet: group size must be >= 1");
  if (shape_.convex_width % group_size_ != 0) {
    throw StructuralError("PartialGroupMaxNet: m_y = " + std::to_string(shape_.convex_width) +
                          " is not divisible by group size G = " + std::to_string(group_size_));
  }
  const std::vector<std::size_t> out(shape_.layers, shape_.convex_width);
  const std::vector<std::size_t> in(shape_.layers, shape_.convex_width / group_size_);
  layers_ = add_partial_layers(params_, shape_, out, in);
}

PartialGroupMaxNet PartialGroupMaxNet::zeros(const PartialShape& shape, std::size_t group_size) {
  return PartialGroupMaxNet(shape, group_size);
}

PartialGroupMaxNet PartialGroupMaxNet::build(const PartialShape& shape, std::size_t group_size,
                                             std::uint64_t seed) {
  PartialGroupMaxNet net(shape, group_size);
  Rng rng(mix_seed(seed, 1));
  init_partial_layers(net.params_, net.layers_, rng);
  return net;
}

double PartialGroupMaxNet::forward(std::span<const double> x, Tape& tape) const {
  const std::size_t q = shape_.layers;
  const std::size_t g = group_size_;
  return partial_forward(params_, shape_, layers_, x, tape, [&](std::size_t i, NodeId pre) {
    return i + 1 < q ? tape.group_max(pre, g) : tape.global_max(pre);
  });
}

double PartialGroupMaxNet::forward(std::span<const double> x_tilde, std::span<const double> y,
                                   Tape& tape) const {
  if (x_tilde.size() != shape_.nonconvex_dim() || y.size() != shape_.convex_dim) {
    throw ShapeError("PartialGroupMaxNet: (x~, y) dimensions do not match the net");
  }
  std::vector<double> x(x_tilde.begin(), x_tilde.end());
  x.insert(x.end(), y.begin(), y.end());
  return forward(x, tape);
}

// -------------------------------------------------------------------- IcnnNet

IcnnNet::IcnnNet(std::size_t input_dim, std::vector<std::size_t> hidden)
    : input_dim_(input_dim), hidden_(std::move(hidden)) {
  require(input_dim_ >= 1, "IcnnNet: input dimension must be >= 1");
  require(!hidden_.empty(), "IcnnNet: at least one hidden layer required");
  for (std::size_t l = 0; l <= hidden_.size(); ++l) {
    const std::size_t out = l < hidden_.size() ? hidden_[l] : 1;
    require(out >= 1, "IcnnNet: hidden widths must be >= 1");
    const std::string tag = std::to_string(l);
    z_weights_.push_back(l == 0 ? ParamBlock{} : params_.add("Wz" + tag, out, hidden_[l - 1]));
    x_weights_.push_back(params_.add("Wx" + tag, out, input_dim_));
    biases_.push_back(params_.add("b" + tag, out, 1));
  }
}

IcnnNet IcnnNet::zeros(std::size_t input_dim, std::vector<std::size_t> hidden) {
  return IcnnNet(input_dim, std::move(hidden));
}

IcnnNet IcnnNet::build(std::size_t input_dim, std::vector<std::size_t> hidden,
                       std::uint64_t seed) {
  IcnnNet net(input_dim, std::move(hidden));
  Rng rng(mix_seed(seed, 1));
  for (std::size_t l = 0; l <= net.hidden_.size(); ++l) {
    if (l > 0) net.params_.fill_glorot_nonnegative(net.z_weights_[l], rng);
    net.params_.fill_glorot(net.x_weights_[l], rng);
  }
  return net;
}

double IcnnNet::forward(std::span<const double> x, Tape& tape) const {
  if (x.size() != input_dim_) throw ShapeError("IcnnNet: input dimension mismatch");
  tape.reset(params_.values());
  const NodeId in = tape.input(x);
  NodeId z = tape.relu(tape.affine(x_weights_[0], biases_[0], in));
  const std::size_t L = hidden_.size();
  for (std::size_t l = 1; l <= L; ++l) {
    const NodeId pre =
        tape.add(tape.clamped_affine(z_weights_[l], {}, z), tape.affine(x_weights_[l], biases_[l], in));
    z = l < L ? tape.relu(pre) : pre;
  }
  return tape.output();
}

// ------------------------------------------------------------- PartialIcnnNet

PartialIcnnNet::PartialIcnnNet(const PartialShape& shape) : shape_(shape) {
  validate_partial(shape_);
  require(shape_.layers >= 2, "PartialIcnnNet: needs at least one hidden layer (layers >= 2)");
  std::vector<std::size_t> out(shape_.layers, shape_.convex_width);
  out.back() = 1;
  layers_ = add_partial_layers(params_, shape_, out, std::vector<std::size_t>(shape_.layers, shape_.convex_width));
}

PartialIcnnNet PartialIcnnNet::zeros(const PartialShape& shape) { return PartialIcnnNet(shape); }

PartialIcnnNet PartialIcnnNet::build(const PartialShape& shape, std::uint64_t seed) {
  PartialIcnnNet net(shape);
  Rng rng(mix_seed(seed, 1));
  init_partial_layers(net.params_, net.layers_, rng);
  return net;
}

double PartialIcnnNet::forward(std::span<const double> x, Tape& tape) const {
  const std::size_t q = shape_.layers;
  return partial_forward(params_, shape_, layers_, x, tape, [&](std::size_t i, NodeId pre) {
    return i + 1 < q ? tape.relu(pre) : pre;
  });
}

// --------------------------------------------------------------------- MlpNet

MlpNet::MlpNet(std::size_t input_dim, std::vector<std::size_t> hidden, Activation activation)
    : input_dim_(input_dim), hidden_(std::move(hidden)), activation_(activation) {
  require(input_dim_ >= 1, "MlpNet: input dimension must be >= 1");
  std::size_t in = input_dim_;
  for (std::size_t l = 0; l <= hidden_.size(); ++l) {
    const std::size_t out = l < hidden_.size() ? hidden_[l] : 1;
    require(out >= 1, "MlpNet: hidden widths must be >= 1");
    weights_.push_back(params_.add("W" + std::to_string(l), out, in));
    biases_.push_back(params_.add("b" + std::to_string(l), out, 1));
    in = out;
  }
}

MlpNet MlpNet::zeros(std::size_t input_dim, std::vector<std::size_t> hidden,
                     Activation activation) {
  return MlpNet(input_dim, std::move(hidden), activation);
}

MlpNet MlpNet::build(std::size_t input_dim, std::vector<std::size_t> hidden,
                     Activation activation, std::uint64_t seed) {
  MlpNet net(input_dim, std::move(hidden), activation);
  Rng rng(mix_seed(seed, 1));
  for (ParamBlock w : net.weights_) net.params_.fill_glorot(w, rng);
  return net;
}

double MlpNet::forward(std::span<const double> x, Tape& tape) const {
  if (x.size() != input_dim_) throw ShapeError("MlpNet: input dimension mismatch");
  tape.reset(params_.values());
  NodeId h = tape.input(x);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = tape.affine(weights_[l], biases_[l], h);
    if (l + 1 < weights_.size()) h = tape.activate(activation_, h);
  }
  return tape.output();
}

}  // namespace groupmax
