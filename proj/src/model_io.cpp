#include "groupmax/model_io.hpp"

#include "groupmax/text.hpp"

namespace groupmax {

using nlohmann::json;

namespace {

constexpr int kModelFormatVersion = 1;

PartialShape partial_shape(const ArchSpec& a, std::size_t input_dim, std::size_t convex_dim) {
  PartialShape s;
  s.input_dim = input_dim;
  s.convex_dim = convex_dim;
  s.ff_width = a.ff_width;
  s.convex_width = a.convex_width;
  s.layers = a.layers;
  s.ff_activation = a.activation;
  return s;
}

Model build_zero_model(const ArchSpec& a, std::size_t input_dim, std::size_t convex_dim) {
  switch (a.kind) {
    case ModelKind::groupmax: return GroupMaxNet::zeros(input_dim, a.widths, a.group_size);
    case ModelKind::partial_groupmax:
      return PartialGroupMaxNet::zeros(partial_shape(a, input_dim, convex_dim), a.group_size);
    case ModelKind::max_affine: return MaxAffineNet::zeros(input_dim, a.cuts);
    case ModelKind::icnn: return IcnnNet::zeros(input_dim, a.widths);
    case ModelKind::partial_icnn:
      return PartialIcnnNet::zeros(partial_shape(a, input_dim, convex_dim));
    case ModelKind::mlp: return MlpNet::zeros(input_dim, a.widths, a.activation);
  }
  throw StructuralError("unknown architecture");
}

}  // namespace

Model build_model(const ArchSpec& a, std::size_t input_dim, std::size_t convex_dim,
                  std::uint64_t seed) {
  switch (a.kind) {
    case ModelKind::groupmax: return GroupMaxNet::build(input_dim, a.widths, a.group_size, seed);
    case ModelKind::partial_groupmax:
      return PartialGroupMaxNet::build(partial_shape(a, input_dim, convex_dim), a.group_size, seed);
    case ModelKind::max_affine: return MaxAffineNet::build(input_dim, a.cuts, seed);
    case ModelKind::icnn: return IcnnNet::build(input_dim, a.widths, seed);
    case ModelKind::partial_icnn:
      return PartialIcnnNet::build(partial_shape(a, input_dim, convex_dim), seed);
    case ModelKind::mlp: return MlpNet::build(input_dim, a.widths, a.activation, seed);
  }
  throw StructuralError("unknown architecture");
}

ArchSpec arch_of(const Model& model) {
  ArchSpec a;
  a.kind = model.kind();
  if (const auto* n = model.get_if<GroupMaxNet>()) {
    a.widths = n->widths();
    a.group_size = n->group_size();
  } else if (const auto* n = model.get_if<PartialGroupMaxNet>()) {
    a.ff_width = n->shape().ff_width;
    a.convex_width = n->shape().convex_width;
    a.layers = n->shape().layers;
    a.activation = n->shape().ff_activation;
    a.group_size = n->group_size();
  } else if (const auto* n = model.get_if<MaxAffineNet>()) {
    a.cuts = n->cut_count();
  } else if (const auto* n = model.get_if<IcnnNet>()) {
    a.widths = n->hidden();
  } else if (const auto* n = model.get_if<PartialIcnnNet>()) {
    a.ff_width = n->shape().ff_width;
    a.convex_width = n->shape().convex_width;
    a.layers = n->shape().layers;
    a.activation = n->shape().ff_activation;
  } else if (const auto* n = model.get_if<MlpNet>()) {
    a.widths = n->hidden();
    a.activation = n->activation();
  }
  return a;
}

json arch_to_json(const ArchSpec& a) {
  json j;
  j["kind"] = to_string(a.kind);
  switch (a.kind) {
    case ModelKind::groupmax:
      j["widths"] = a.widths;
      j["group_size"] = a.group_size;
      break;
    case ModelKind::partial_groupmax:
      j["ff_width"] = a.ff_width;
      j["convex_width"] = a.convex_width;
      j["layers"] = a.layers;
      j["group_size"] = a.group_size;
      j["activation"] = to_string(a.activation);
      break;
    case ModelKind::max_affine:
      j["cuts"] = a.cuts;
      break;
    case ModelKind::icnn:
      j["widths"] = a.widths;
      break;
    case ModelKind::partial_icnn:
      j["ff_width"] = a.ff_width;
      j["convex_width"] = a.convex_width;
      j["layers"] = a.layers;
      j["activation"] = to_string(a.activation);
      break;
    case ModelKind::mlp:
      j["widths"] = a.widths;
      j["activation"] = to_string(a.activation);
      break;
  }
  return j;
}

ArchSpec arch_from_json(const json& j) {
  const std::string where = "architecture";
  ArchSpec a;
  a.kind = parse_model_kind(get_key<std::string>(j, "kind", where));
  const auto positive = [&](std::size_t v, const char* key) {
    if (v == 0) throw StructuralError(where + "." + key + " must be >= 1");
    return v;
  };
  switch (a.kind) {
    case ModelKind::groupmax:
    case ModelKind::icnn:
    case ModelKind::mlp:
      a.widths = get_key<std::vector<std::size_t>>(j, "widths", where);
      if (a.widths.empty()) throw StructuralError(where + ".widths must be nonempty");
      for (std::size_t w : a.widths) positive(w, "widths");
      break;
    case ModelKind::partial_groupmax:
    case ModelKind::partial_icnn:
      a.ff_width = positive(get_key<std::size_t>(j, "ff_width", where), "ff_width");
      a.convex_width = positive(get_key<std::size_t>(j, "convex_width", where), "convex_width");
      a.layers = positive(get_key<std::size_t>(j, "layers", where), "layers");
      break;
    case ModelKind::max_affine:
      a.cuts = positive(get_key<std::size_t>(j, "cuts", where), "cuts");
      break;
  }
  if (a.kind == ModelKind::groupmax || a.kind == ModelKind::partial_groupmax) {
    a.group_size = positive(get_key<std::size_t>(j, "group_size", where), "group_size");
  }
  if (a.kind == ModelKind::mlp || a.kind == ModelKind::partial_groupmax ||
      a.kind == ModelKind::partial_icnn) {
    a.activation = parse_activation(get_key_or<std::string>(j, "activation", "relu", where));
  }
  if (a.kind == ModelKind::groupmax) {
    for (std::size_t l = 0; l + 1 < a.widths.size(); ++l) {
      if (a.widths[l] % a.group_size != 0) {
        throw StructuralError(where + ".group_size: width M_" + std::to_string(l + 1) + " = " +
                              std::to_string(a.widths[l]) +
                              " must be divisible by the group size G = " +
                              std::to_string(a.group_size));
      }
    }
  }
  if (a.kind == ModelKind::partial_groupmax && a.convex_width % a.group_size != 0) {
    throw StructuralError(where + ".group_size: convex_width m_y = " +
                          std::to_string(a.convex_width) +
                          " must be divisible by the group size G = " +
                          std::to_string(a.group_size));
  }
  if (a.kind == ModelKind::partial_icnn && a.layers < 2) {
    throw StructuralError(where + ".layers must be >= 2 for partial_icnn");
  }
  return a;
}

json normalizer_to_json(const Normalizer& n) {
  return json{{"input_mean", n.input_mean},   {"input_std", n.input_std},
              {"output_mean", n.output_mean}, {"output_std", n.output_std},
              {"sample_size", n.sample_size}};
}

Normalizer normalizer_from_json(const json& j) {
  const std::string where = "normalizer";
  Normalizer n;
  n.input_mean = get_key<std::vector<double>>(j, "input_mean", where);
  n.input_std = get_key<std::vector<double>>(j, "input_std", where);
  n.output_mean = get_key<double>(j, "output_mean", where);
  n.output_std = get_key<double>(j, "output_std", where);
  n.sample_size = get_key<std::size_t>(j, "sample_size", where);
  n.validate();
  return n;
}

std::string serialize_model(const TrainedModel& m) {
  json j;
  j["format"] = "groupmax-model";
  j["version"] = kModelFormatVersion;
  j["input_dim"] = m.model.input_dim();
  j["convex_dim"] = m.model.convex_dim();
  j["architecture"] = arch_to_json(arch_of(m.model));
  json blocks = json::array();
  const ParamStore& ps = m.model.params();
  for (const NamedBlock& nb : ps.blocks()) {
    const auto v = ps.span(nb.block);
    blocks.push_back(json{{"name", nb.name},
                          {"rows", nb.block.rows},
                          {"cols", nb.block.cols},
                          {"values", std::vector<double>(v.begin(), v.end())}});
  }
  j["parameters"] = std::move(blocks);
  j["normalizer"] = m.normalizer ? normalizer_to_json(*m.normalizer) : json(nullptr);
  return j.dump(1) + "\n";
}

TrainedModel deserialize_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw StructuralError(std::string("model file is not valid JSON: ") + e.what());
  }
  const std::string where = "model";
  if (get_key<std::string>(j, "format", where) != "groupmax-model") {
    throw StructuralError("model: not a groupmax model file");
  }
  if (get_key<int>(j, "version", where) != kModelFormatVersion) {
    throw StructuralError("model: unsupported version");
  }
  const ArchSpec arch = arch_from_json(get_key<json>(j, "architecture", where));
  const auto input_dim = get_key<std::size_t>(j, "input_dim", where);
  const auto convex_dim = get_key<std::size_t>(j, "convex_dim", where);
  Model model = build_zero_model(arch, input_dim, convex_dim);
  ParamStore& ps = model.params();
  const json& blocks = get_key<json>(j, "parameters", where);
  if (!blocks.is_array() || blocks.size() != ps.blocks().size()) {
    throw StructuralError("model: parameter block count does not match the architecture");
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const NamedBlock& nb = ps.blocks()[i];
    const json& b = blocks[i];
    if (get_key<std::string>(b, "name", where) != nb.name ||
        get_key<std::uint32_t>(b, "rows", where) != nb.block.rows ||
        get_key<std::uint32_t>(b, "cols", where) != nb.block.cols) {
      throw StructuralError("model: parameter block '" + nb.name + "' has the wrong name or shape");
    }
    const auto values = get_key<std::vector<double>>(b, "values", where);
    if (values.size() != nb.block.size()) {
      throw StructuralError("model: parameter block '" + nb.name + "' has the wrong length");
    }
    std::copy(values.begin(), values.end(), ps.span(nb.block).begin());
  }
  TrainedModel out{std::move(model), std::nullopt};
  if (j.contains("normalizer") && !j["normalizer"].is_null()) {
    out.normalizer = normalizer_from_json(j["normalizer"]);
  }
  return out;
}

void save_model(const TrainedModel& m, const std::string& path) {
  write_file_atomic(path, serialize_model(m));
}

TrainedModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

}  // namespace groupmax
