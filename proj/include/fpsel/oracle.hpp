#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpsel/ir.hpp"
#include "fpsel/target.hpp"

namespace fpsel {

/// Parameter values of one input. Binary32 values are stored widened to
/// double, which is exact.
using SamplePoint = std::map<std::string, double, std::less<>>;

/// Working precisions tried by the real evaluator, in bits.
inline constexpr int kPrecisionLadder[] = {80, 160, 320, 640, 1280, 2560, 5120, 10240};

/// Correctly rounded value of `e` at `pt`, or nullopt when the value is out
/// of domain, a pole, overflows `out`, or cannot be decided within the
/// precision ladder. FloatOp nodes denote their desugaring (requires target).
std::optional<double> eval_real(const Expr& e, const SamplePoint& pt, TypeTag out,
                                const TargetDesc* target = nullptr);

/// Like eval_real for every node at once. `node_types` lists, in preorder,
/// the type each node is rounded to; nodes typed Real or Bool are skipped.
std::vector<std::optional<double>> eval_nodes(const Expr& e, const SamplePoint& pt,
                                              const std::vector<TypeTag>& node_types,
                                              const TargetDesc* target = nullptr);

/// Result of one operator on float arguments; NaN is the error value.
double apply_operator(const OperatorDef& op, const std::vector<double>& args);

/// Float semantics of a resolved program body; NaN on any error.
double eval_float(const Expr& e, const SamplePoint& pt, const TargetDesc& target);

/// Ordinal of a finite float: sign-magnitude reflected so that the order of
/// reals is preserved and both zeros map to 0.
std::int64_t float_ordinal(double v, TypeTag t);
double ordinal_to_float(std::int64_t ord, TypeTag t);
/// Largest ordinal of a finite float of type t.
std::int64_t max_ordinal(TypeTag t);

double bits_of_error(double got, double want, TypeTag t);

std::vector<SamplePoint> sample(const Program& p, const TargetDesc& target, std::size_t n, std::uint64_t seed);

struct SampleSet {
  std::vector<SamplePoint> points;
  /// Correctly rounded value of the program at each point.
  std::vector<double> truth;
  std::size_t draws = 0;
};
SampleSet sample_with_truth(const Program& p, const TargetDesc& target, std::size_t n, std::uint64_t seed);

std::vector<double> ground_truth(const Program& p, const std::vector<SamplePoint>& points, const TargetDesc& target);

struct ErrorReport {
  std::vector<double> bits;
  double mean_bits = 0.0;
  double accuracy = 0.0;
};

ErrorReport accuracy(const Program& p, const std::vector<SamplePoint>& points, const TargetDesc& target);
/// Against precomputed true values, e.g. those of the program a candidate was
/// derived from.
ErrorReport accuracy(const Program& p, const std::vector<SamplePoint>& points, const std::vector<double>& truth,
                     const TargetDesc& target);

/// Mean bits of error each FloatOp introduces when given correctly rounded
/// arguments. Every node has an entry; non-operators have 0.
std::map<NodePath, double> local_error(const Program& p, const std::vector<SamplePoint>& points,
                                       const TargetDesc& target);

/// Type of every node in preorder, given variable types.
std::vector<TypeTag> node_types(const Expr& e, const VarEnv& env, const TargetDesc& target);

}  // namespace fpsel
