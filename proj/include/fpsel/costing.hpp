#pragma once

#include <map>

#include "fpsel/ir.hpp"
#include "fpsel/target.hpp"

namespace fpsel {

/// Read-only view of a target's cost knobs. The target must outlive it.
class CostModel {
 public:
  explicit CostModel(const TargetDesc& target) : target_(&target) {}

  const TargetDesc& target() const { return *target_; }
  double op_cost(std::string_view op) const { return target_->at(op).cost; }
  double literal_cost(TypeTag t) const { return target_->literal_cost(t); }
  double var_cost() const { return target_->var_cost(); }
  IfCost if_cost() const { return target_->if_cost(); }
  /// Comparisons are not declared in target files and cost one unit.
  static constexpr double kCmpCost = 1.0;

 private:
  const TargetDesc* target_;
};

/// Tree cost of a resolved expression; throws TypeError on RealOp nodes.
double program_cost(const Expr& e, const CostModel& cm);

struct Opportunity {
  /// Per node, in the child-subtracted form; sums to `root_delta`.
  std::map<NodePath, double> raw;
  /// Negative entries clamped to zero, for ranking.
  std::map<NodePath, double> clamped;
  double root_delta = 0.0;
};

struct OpportunityLimits {
  std::size_t node_limit = 2000;
  std::size_t iter_limit = 4;
};

/// Cost reduction a cheap simplification pass finds at each node, minus the
/// reduction already found inside its children. `env` types the variables.
Opportunity cost_opportunity(const Expr& e, const VarEnv& env, const TargetDesc& target, OpportunityLimits limits = {});

/// As above with a caller-supplied rule set, e.g. empty.
Opportunity cost_opportunity(const Expr& e, const VarEnv& env, const TargetDesc& target,
                             const std::vector<RewriteRule>& rules, OpportunityLimits limits);

}  // namespace fpsel
