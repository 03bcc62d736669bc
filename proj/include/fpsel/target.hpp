#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpsel/ir.hpp"

namespace fpsel {

/// How an operator's floating-point result is produced from its desugaring.
struct OperatorImpl {
  enum class Kind { CorrectlyRounded, RoundedAt };
  Kind kind = Kind::CorrectlyRounded;
  /// Significand bits of the intermediate rounding for RoundedAt.
  int bits = 0;

  static OperatorImpl correctly_rounded() { return {}; }
  static OperatorImpl rounded_at(int q) { return {Kind::RoundedAt, q}; }
  bool operator==(const OperatorImpl&) const = default;
};

struct OperatorDef {
  std::string name;
  std::optional<std::string> surface;
  std::vector<std::string> formals;
  std::vector<TypeTag> arg_types;
  TypeTag ret_type = TypeTag::B64;
  /// Real expression over the formals (as Var nodes).
  Expr approx = Expr::var("x");
  double cost = 1.0;
  OperatorImpl impl;
  std::optional<std::string> codegen;

  bool operator==(const OperatorDef&) const = default;
};

enum class IfMode { Scalar, Vector };

struct IfCost {
  IfMode mode = IfMode::Scalar;
  double overhead = 0.0;
  bool operator==(const IfCost&) const = default;
};

/// A validated set of operators plus the program-level cost knobs.
/// Scalar settings are optional so that composition can tell "unset" from
/// "set to the default".
class TargetDesc {
 public:
  std::string name;
  std::map<std::string, OperatorDef, std::less<>> operators;
  std::map<TypeTag, double> literal_costs;
  std::optional<double> var_cost_setting;
  std::optional<IfCost> if_cost_setting;
  std::vector<std::string> imports;

  const OperatorDef* find(std::string_view op_name) const;
  const OperatorDef& at(std::string_view op_name) const;
  /// The unique operator with this surface name and return type, if any.
  const OperatorDef* find_surface(std::string_view surface, TypeTag ret) const;

  double literal_cost(TypeTag t) const;
  double var_cost() const { return var_cost_setting.value_or(0.0); }
  IfCost if_cost() const { return if_cost_setting.value_or(IfCost{}); }
  bool has_codegen() const;

  /// Throws TargetError on any broken invariant.
  void validate() const;

  bool operator==(const TargetDesc&) const = default;
};

TargetDesc load_target(const std::filesystem::path& path);
/// Parses target text; `#:import NAME` resolves to `<search_dir>/NAME.tgt`.
TargetDesc parse_target(std::string_view text, const std::filesystem::path& search_dir = ".");
TargetDesc compose(const TargetDesc& base, const TargetDesc& overlay);

struct RewriteRule {
  enum class Kind { MathIdentity, Lowering, Lifting, Fold };
  std::string name;
  Expr lhs = Expr::pat("a");
  Expr rhs = Expr::pat("a");
  Kind kind = Kind::MathIdentity;
};

/// One Lifting and one Lowering rule per operator.
std::vector<RewriteRule> derive_rules(const TargetDesc& target);

/// Renders a resolved program body using the operators' codegen templates
/// (`{0}`, `{1}`, ...) or `name(args...)` when an operator has none.
std::string format_target_code(const Program& p, const TargetDesc& target, bool require_templates = false);

/// Shortest decimal text that reads back to the same float.
std::string format_float(double v, TypeTag t);

}  // namespace fpsel
