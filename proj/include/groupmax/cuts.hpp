#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "groupmax/model.hpp"
#include "groupmax/training.hpp"

namespace groupmax {

/// Affine function slope . x + intercept.
struct Cut {
  std::vector<double> slope;
  double intercept = 0.0;

  double evaluate(std::span<const double> x) const;
  friend bool operator==(const Cut&, const Cut&) = default;
};

/// Finite max-affine function. For conditional sets, condition holds the
/// non-convex input x~ the cuts were computed at.
struct CutSet {
  std::size_t dim = 0;
  std::vector<Cut> cuts;
  std::optional<std::vector<double>> condition;
  std::string model_hash;

  friend bool operator==(const CutSet&, const CutSet&) = default;
};

/// max_i (slope_i . x + intercept_i). Throws ShapeError on dimension mismatch.
double eval_cutset(const CutSet& c, std::span<const double> x);

/// Layered form shared by every net the cut machinery handles:
///   pre_i = P_i z_{i-1} + S_i y + c_i,   P_i >= 0,   z_0 absent
///   z_i = group max of pre_i (i < q),    h = max_l (pre_q)_l
/// The fully convex GroupMax net has S_i = 0 for i > 1; the partial net has
/// P_i, S_i and c_i depending on x~.
struct CutLayer {
  RealMatrix z_weight;  // M_i x K_{i-1}, empty on the first layer
  RealMatrix y_weight;  // M_i x k
  std::vector<double> bias;
};

struct CutNetwork {
  std::size_t dim = 0;
  std::size_t group_size = 1;
  std::vector<CutLayer> layers;

  double evaluate(std::span<const double> y) const;
};

CutNetwork cut_network(const GroupMaxNet& net);
CutNetwork cut_network(const MaxAffineNet& net);
/// Evaluates the x~-dependent layer matrices of the partial net at x_tilde.
CutNetwork conditional_cut_network(const PartialGroupMaxNet& net, std::span<const double> x_tilde);

struct EnumerationStats {
  double predicted = 0.0;  // exact size of the undeduplicated enumeration
  double formula = 0.0;    // closed form M * G^(K(q-1))
  std::size_t raw = 0;     // cuts produced before deduplication
  std::size_t kept = 0;    // after deduplication
};

constexpr std::uint64_t kDefaultCutCap = 1000000;

/// Exact size of the enumeration by the layer-by-layer product rule.
double predicted_cut_count(const CutNetwork& net);
/// The closed-form count M_q * G^(K(q-1)), K = M_1 / G.
double formula_cut_count(const GroupMaxNet& net);

/// Distributes every max over the nonnegative sums, layer by layer, then
/// removes duplicates (componentwise within 1e-12). Throws CutOverflowError
/// if the undeduplicated count would exceed cap.
CutSet enumerate_cuts(const CutNetwork& net, std::uint64_t cap = kDefaultCutCap,
                      EnumerationStats* stats = nullptr, double formula = 0.0);
CutSet enumerate_cuts(const GroupMaxNet& net, std::uint64_t cap = kDefaultCutCap,
                      EnumerationStats* stats = nullptr);
CutSet enumerate_cuts(const MaxAffineNet& net, std::uint64_t cap = kDefaultCutCap,
                      EnumerationStats* stats = nullptr);
CutSet enumerate_conditional_cuts(const PartialGroupMaxNet& net, std::span<const double> x_tilde,
                                  std::uint64_t cap = kDefaultCutCap,
                                  EnumerationStats* stats = nullptr);

/// Drops cuts equal to an earlier kept one within tol componentwise; the
/// survivors keep their original order.
std::vector<Cut> deduplicate(std::vector<Cut> cuts, double tol = 1e-12);

/// The affine piece attaining h at the query point, found by following the
/// argmax winners of a forward pass (ties: lowest index). For partial nets x
/// is (x~, y) and the cut is in y.
Cut active_cut(const Model& model, std::span<const double> x);
Cut active_cut(const GroupMaxNet& net, std::span<const double> x);
Cut active_cut(const MaxAffineNet& net, std::span<const double> x);
Cut active_cut(const PartialGroupMaxNet& net, std::span<const double> x_tilde,
               std::span<const double> y);

/// Maps a cut learned in standardised coordinates back to original ones.
/// The cut's variables are normalizer inputs offset .. offset + dim - 1.
Cut denormalize_cut(const Cut& c, const Normalizer& norm, std::size_t offset = 0);

/// FNV-1a of the parameter bytes, 16 hex digits.
std::string model_hash(const ParamStore& params);

/// Text form:
///   cuts v1 dim=<d> n=<N>[ conditional x̃=<r,r,...>][ model=<hex>]
///   <intercept> <slope_1> ... <slope_d>     (one line per cut)
std::string format_cuts(const CutSet& c);
/// Throws ParseError carrying the offending line number.
CutSet parse_cuts(const std::string& text);
void export_cuts(const CutSet& c, const std::string& path);
CutSet import_cuts(const std::string& path);

}  // namespace groupmax
