#include "groupmax/model.hpp"

namespace groupmax {

namespace {
template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;
}  // namespace

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::groupmax: return "groupmax";
    case ModelKind::partial_groupmax: return "partial_groupmax";
    case ModelKind::max_affine: return "max_affine";
    case ModelKind::icnn: return "icnn";
    case ModelKind::partial_icnn: return "partial_icnn";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  for (ModelKind k : {ModelKind::groupmax, ModelKind::partial_groupmax, ModelKind::max_affine,
                      ModelKind::icnn, ModelKind::partial_icnn, ModelKind::mlp}) {
    if (to_string(k) == name) return k;
  }
  throw StructuralError("unknown architecture kind '" + name +
                        "' (expected groupmax, partial_groupmax, max_affine, icnn, "
                        "partial_icnn or mlp)");
}

ModelKind Model::kind() const {
  return std::visit(overloaded{
                        [](const GroupMaxNet&) { return ModelKind::groupmax; },
                        [](const PartialGroupMaxNet&) { return ModelKind::partial_groupmax; },
                        [](const MaxAffineNet&) { return ModelKind::max_affine; },
                        [](const IcnnNet&) { return ModelKind::icnn; },
                        [](const PartialIcnnNet&) { return ModelKind::partial_icnn; },
                        [](const MlpNet&) { return ModelKind::mlp; },
                    },
                    net_);
}

std::size_t Model::input_dim() const {
  return std::visit([](const auto& n) { return n.input_dim(); }, net_);
}

std::size_t Model::convex_dim() const {
  return std::visit(overloaded{
                        [](const PartialGroupMaxNet& n) { return n.convex_dim(); },
                        [](const PartialIcnnNet& n) { return n.convex_dim(); },
                        [](const MlpNet&) { return std::size_t{0}; },
                        [](const auto& n) { return n.input_dim(); },
                    },
                    net_);
}

const ParamStore& Model::params() const {
  return std::visit([](const auto& n) -> const ParamStore& { return n.params(); }, net_);
}

ParamStore& Model::params() {
  return std::visit([](auto& n) -> ParamStore& { return n.params(); }, net_);
}

double Model::forward(std::span<const double> x, Tape& tape) const {
  return std::visit([&](const auto& n) { return n.forward(x, tape); }, net_);
}

double Model::evaluate(std::span<const double> x) const {
  Tape tape;
  return forward(x, tape);
}

}  // namespace groupmax
