#pragma once

#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "groupmax/errors.hpp"
#include "groupmax/model.hpp"
#include "groupmax/training.hpp"

namespace groupmax {

/// j[key] as T, or StructuralError naming where.key.
template <class T>
T get_key(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw StructuralError(where + ": missing key '" + key + "'");
  }
  const nlohmann::json& v = j.at(key);
  const auto nonnegative_integer = [](const nlohmann::json& e) {
    return e.is_number_unsigned() || (e.is_number_integer() && e.template get<std::int64_t>() >= 0);
  };
  bool ok = true;
  if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    ok = nonnegative_integer(v);
  } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
    ok = v.is_array();
    for (const auto& e : v) ok = ok && nonnegative_integer(e);
  } else if constexpr (std::is_floating_point_v<T>) {
    ok = v.is_number();
  }
  if (!ok) throw StructuralError(where + ": key '" + key + "' has the wrong type");
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw StructuralError(where + ": key '" + key + "' has the wrong type");
  }
}

template <class T>
T get_key_or(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get_key<T>(j, key, where);
}

/// Architecture description independent of input dimensions.
///   groupmax:          widths = M_1..M_q, group_size
///   partial_groupmax:  ff_width, convex_width, layers, group_size, activation (x~ path)
///   max_affine:        cuts
///   icnn:              widths = hidden widths
///   partial_icnn:      ff_width, convex_width, layers (= hidden + 1), activation
///   mlp:               widths = hidden widths, activation
struct ArchSpec {
  ModelKind kind = ModelKind::groupmax;
  std::vector<std::size_t> widths;
  std::size_t group_size = 1;
  std::size_t cuts = 1;
  std::size_t ff_width = 0;
  std::size_t convex_width = 0;
  std::size_t layers = 0;
  Activation activation = Activation::relu;
};

/// convex_dim is only read by the partial architectures.
Model build_model(const ArchSpec& arch, std::size_t input_dim, std::size_t convex_dim,
                  std::uint64_t seed);
ArchSpec arch_of(const Model& model);

nlohmann::json arch_to_json(const ArchSpec& arch);
/// Throws StructuralError naming the offending key.
ArchSpec arch_from_json(const nlohmann::json& j);

nlohmann::json normalizer_to_json(const Normalizer& n);
Normalizer normalizer_from_json(const nlohmann::json& j);

/// Versioned JSON document: architecture constants, every parameter block
/// by name in round-trip decimal, and the normalizer when present.
std::string serialize_model(const TrainedModel& m);
TrainedModel deserialize_model(const std::string& text);
void save_model(const TrainedModel& m, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace groupmax
