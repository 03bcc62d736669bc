#include <algorithm>

#include "fpsel/costing.hpp"
#include "fpsel/extraction.hpp"
#include "fpsel/rules.hpp"

namespace fpsel {

double program_cost(const Expr& e, const CostModel& cm) {
  auto sum_args = [&] {
    double s = 0.0;
    for (const auto& a : e.args()) s += program_cost(a, cm);
    return s;
  };
  switch (e.kind()) {
    case ExprKind::Var: return cm.var_cost();
    case ExprKind::Lit:
      if (!is_float(e.type())) throw TypeError("real literal in a float program");
      return cm.literal_cost(e.type());
    case ExprKind::FloatOp: return cm.op_cost(e.name()) + sum_args();
    case ExprKind::Cmp: return CostModel::kCmpCost + sum_args();
    case ExprKind::If: {
      IfCost ic = cm.if_cost();
      double cond = program_cost(e.arg(0), cm);
      double a = program_cost(e.arg(1), cm), b = program_cost(e.arg(2), cm);
      return ic.overhead + cond + (ic.mode == IfMode::Scalar ? std::max(a, b) : a + b);
    }
    case ExprKind::RealOp:
      throw TypeError("unresolved operator `" + std::string(fn_name(e.fn())) + "` has no cost");
    case ExprKind::PatVar: break;
  }
  throw TypeError("pattern variable has no cost");
}

namespace {

bool rewritable(const Expr& e) {
  if (e.is(ExprKind::If) || e.is(ExprKind::Cmp)) return false;
  return std::all_of(e.args().begin(), e.args().end(), rewritable);
}

}  // namespace

Opportunity cost_opportunity(const Expr& e, const VarEnv& env, const TargetDesc& target,
                             const std::vector<RewriteRule>& rules, OpportunityLimits limits) {
  CostModel cm(target);
  struct Site {
    NodePath path;
    Expr node;
    std::optional<ClassId> cls;
  };
  std::vector<Site> sites;
  EGraph g;
  for_each_node(e, [&](const NodePath& path, const Expr& n) {
    Site s{path, n, std::nullopt};
    if (n.is(ExprKind::FloatOp) && rewritable(n)) s.cls = g.add(n);
    sites.push_back(std::move(s));
  });
  g.saturate(rules, {limits.node_limit, limits.iter_limit});
  Extractor ex(g, cm, env);

  // Preorder puts children after parents, so a reverse sweep sees every
  // child's delta before its parent's.
  std::map<NodePath, double> delta;
  Opportunity out;
  for (auto it = sites.rbegin(); it != sites.rend(); ++it) {
    double kids = 0.0;
    NodePath child = it->path;
    for (std::uint32_t i = 0; i < it->node.args().size(); ++i) {
      child.push_back(i);
      kids += delta.at(child);
      child.pop_back();
    }
    double d = kids;
    if (it->cls) {
      double best = ex.best_cost(*it->cls, typecheck(it->node, env, target)).value_or(program_cost(it->node, cm));
      d = program_cost(it->node, cm) - best;
    }
    delta[it->path] = d;
    out.raw[it->path] = d - kids;
    out.clamped[it->path] = std::max(0.0, d - kids);
  }
  out.root_delta = delta.at({});
  return out;
}

Opportunity cost_opportunity(const Expr& e, const VarEnv& env, const TargetDesc& target, OpportunityLimits limits) {
  std::vector<RewriteRule> rules = simplifying_rules();
  for (auto& r : derive_rules(target)) rules.push_back(std::move(r));
  return cost_opportunity(e, env, target, rules, limits);
}

}  // namespace fpsel
