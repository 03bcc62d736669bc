#include <algorithm>
#include <functional>

#include "fpsel/egraph.hpp"

namespace fpsel {

std::size_t ENodeHash::operator()(const ENode& n) const noexcept {
  std::size_t h = static_cast<std::size_t>(n.head.kind) * 0x9e3779b97f4a7c15ULL ^ n.head.id;
  h = h * 31 + n.arity;
  for (std::uint8_t i = 0; i < n.arity; ++i) h = (h ^ n.kids[i]) * 0x100000001b3ULL;
  return h;
}

std::string_view stop_reason_name(SaturationReport::StopReason r) {
  switch (r) {
    case SaturationReport::StopReason::Saturated: return "saturated";
    case SaturationReport::StopReason::NodeLimit: return "node-limit";
    case SaturationReport::StopReason::IterLimit: return "iter-limit";
    case SaturationReport::StopReason::Unsound: return "unsound";
  }
  return "?";
}

namespace {

void collect_vars(const Expr& e, std::vector<std::string>& vars) {
  if (e.is(ExprKind::PatVar)) {
    if (std::find(vars.begin(), vars.end(), e.name()) == vars.end()) vars.push_back(e.name());
    return;
  }
  for (const auto& a : e.args()) collect_vars(a, vars);
}

std::size_t var_index(const Pattern& p, const std::string& name) {
  auto it = std::find(p.vars.begin(), p.vars.end(), name);
  return static_cast<std::size_t>(it - p.vars.begin());
}

bool node_less(const ENode& a, const ENode& b) {
  if (a.head != b.head) return a.head < b.head;
  if (a.arity != b.arity) return a.arity < b.arity;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

Pattern compile_pattern(const Expr& e, std::vector<std::string> vars) {
  collect_vars(e, vars);
  return {e, std::move(vars)};
}

// ---------------------------------------------------------------------------

std::uint32_t EGraph::intern_var(const std::string& s) {
  auto [it, inserted] = var_index_.try_emplace(s, static_cast<std::uint32_t>(var_names_.size()));
  if (inserted) var_names_.push_back(s);
  return it->second;
}

std::uint32_t EGraph::intern_op(const std::string& s) {
  auto [it, inserted] = op_index_.try_emplace(s, static_cast<std::uint32_t>(op_names_.size()));
  if (inserted) op_names_.push_back(s);
  return it->second;
}

std::uint32_t EGraph::intern_lit(const Rational& q) {
  auto [it, inserted] = lit_index_.try_emplace(q.get_str(), static_cast<std::uint32_t>(lits_.size()));
  if (inserted) lits_.push_back(q);
  return it->second;
}

std::optional<Head> EGraph::lookup_head(const Expr& e) const {
  switch (e.kind()) {
    case ExprKind::Var: {
      auto it = var_index_.find(e.name());
      if (it == var_index_.end()) return std::nullopt;
      return Head{Head::Kind::Var, it->second};
    }
    case ExprKind::Lit: {
      auto it = lit_index_.find(e.value().get_str());
      if (it == lit_index_.end()) return std::nullopt;
      return Head{Head::Kind::Lit, it->second};
    }
    case ExprKind::RealOp: return Head{Head::Kind::Real, static_cast<std::uint32_t>(e.fn())};
    case ExprKind::FloatOp: {
      auto it = op_index_.find(e.name());
      if (it == op_index_.end()) return std::nullopt;
      return Head{Head::Kind::Float, it->second};
    }
    default: return std::nullopt;
  }
}

std::string EGraph::head_name(const Head& h) const {
  switch (h.kind) {
    case Head::Kind::Var: return var_names_[h.id];
    case Head::Kind::Lit: return lits_[h.id].get_str();
    case Head::Kind::Real: return std::string(fn_name(static_cast<RealFn>(h.id)));
    case Head::Kind::Float: return op_names_[h.id];
  }
  return "?";
}

ClassId EGraph::find(ClassId id) const {
  ClassId root = id;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[id] != root) {
    ClassId next = parent_[id];
    parent_[id] = root;
    id = next;
  }
  return root;
}

ENode EGraph::canonicalize(ENode n) const {
  for (std::uint8_t i = 0; i < n.arity; ++i) n.kids[i] = find(n.kids[i]);
  return n;
}

ClassId EGraph::add_node(ENode node) {
  node = canonicalize(node);
  if (auto it = memo_.find(node); it != memo_.end()) return find(it->second);
  if (memo_.size() >= node_limit_) throw NodeLimitExceeded();
  auto id = static_cast<ClassId>(classes_.size());
  parent_.push_back(id);
  classes_.push_back({{node}, {}});
  for (std::uint8_t i = 0; i < node.arity; ++i) classes_[node.kids[i]].parents.push_back({node, id});
  memo_.emplace(node, id);
  head_index_[node.head].push_back(id);
  return id;
}

ClassId EGraph::add(const Expr& e) {
  ENode n;
  switch (e.kind()) {
    case ExprKind::Var: n.head = {Head::Kind::Var, intern_var(e.name())}; break;
    case ExprKind::Lit: n.head = {Head::Kind::Lit, intern_lit(e.value())}; break;
    case ExprKind::RealOp: n.head = {Head::Kind::Real, static_cast<std::uint32_t>(e.fn())}; break;
    case ExprKind::FloatOp: n.head = {Head::Kind::Float, intern_op(e.name())}; break;
    default: throw TypeError("cannot add `" + to_sexpr(e) + "` to an e-graph");
  }
  if (e.args().size() > kMaxArity) throw TypeError("operator arity above " + std::to_string(kMaxArity));
  n.arity = static_cast<std::uint8_t>(e.args().size());
  for (std::size_t i = 0; i < e.args().size(); ++i) n.kids[i] = add(e.args()[i]);
  return add_node(n);
}

std::optional<ClassId> EGraph::lookup(const Expr& e) const {
  auto head = lookup_head(e);
  if (!head || e.args().size() > kMaxArity) return std::nullopt;
  ENode n;
  n.head = *head;
  n.arity = static_cast<std::uint8_t>(e.args().size());
  for (std::size_t i = 0; i < e.args().size(); ++i) {
    auto c = lookup(e.args()[i]);
    if (!c) return std::nullopt;
    n.kids[i] = *c;
  }
  auto it = memo_.find(canonicalize(n));
  if (it == memo_.end()) return std::nullopt;
  return find(it->second);
}

ClassId EGraph::merge(ClassId a, ClassId b) {
  a = find(a);
  b = find(b);
  if (a == b) return a;
  const Rational* qa = class_constant(a);
  const Rational* qb = class_constant(b);
  if (qa && qb && *qa != *qb) unsound_ = true;
  auto weight = [&](ClassId c) { return classes_[c].parents.size() + classes_[c].nodes.size(); };
  if (weight(a) < weight(b) || (weight(a) == weight(b) && b < a)) std::swap(a, b);
  parent_[b] = a;
  auto& into = classes_[a];
  auto& from = classes_[b];
  into.nodes.insert(into.nodes.end(), from.nodes.begin(), from.nodes.end());
  into.parents.insert(into.parents.end(), from.parents.begin(), from.parents.end());
  from.nodes.clear();
  from.nodes.shrink_to_fit();
  from.parents.clear();
  from.parents.shrink_to_fit();
  pending_.push_back(a);
  return a;
}

std::size_t EGraph::rebuild() {
  std::size_t unions = 0;
  while (!pending_.empty()) {
    std::vector<ClassId> todo;
    todo.swap(pending_);
    for (auto& c : todo) c = find(c);
    std::sort(todo.begin(), todo.end());
    todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
    for (ClassId id : todo) {
      id = find(id);
      auto parents = std::move(classes_[id].parents);
      classes_[id].parents.clear();
      for (const auto& [n, c] : parents) memo_.erase(n);
      for (auto& [n, c] : parents) {
        n = canonicalize(n);
        memo_[n] = find(c);
      }
      std::sort(parents.begin(), parents.end(), [](const auto& x, const auto& y) { return node_less(x.first, y.first); });
      std::vector<std::pair<ENode, ClassId>> kept;
      for (auto& entry : parents) {
        if (!kept.empty() && kept.back().first == entry.first) {
          if (find(kept.back().second) != find(entry.second)) {
            merge(kept.back().second, entry.second);
            ++unions;
          }
          continue;
        }
        kept.push_back(entry);
      }
      auto& target = classes_[find(id)].parents;
      target.insert(target.end(), kept.begin(), kept.end());
    }
  }
  head_index_.clear();
  for (ClassId id = 0; id < classes_.size(); ++id) {
    if (find(id) != id) continue;
    auto& nodes = classes_[id].nodes;
    for (auto& n : nodes) n = canonicalize(n);
    std::sort(nodes.begin(), nodes.end(), node_less);
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    for (const auto& n : nodes) {
      auto& v = head_index_[n.head];
      if (v.empty() || v.back() != id) v.push_back(id);
    }
  }
  return unions;
}

std::size_t EGraph::class_count() const {
  std::size_t n = 0;
  for (ClassId id = 0; id < classes_.size(); ++id)
    if (find(id) == id) ++n;
  return n;
}

std::vector<ClassId> EGraph::classes() const {
  std::vector<ClassId> out;
  for (ClassId id = 0; id < classes_.size(); ++id)
    if (find(id) == id) out.push_back(id);
  return out;
}

const Rational* EGraph::class_constant(ClassId id) const {
  for (const auto& n : classes_[find(id)].nodes)
    if (n.head.kind == Head::Kind::Lit) return &lits_[n.head.id];
  return nullptr;
}

std::string EGraph::dump() const {
  std::string out;
  for (ClassId id : classes()) {
    out += "c" + std::to_string(id) + " :=";
    bool first = true;
    for (const auto& n : classes_[id].nodes) {
      out += first ? " " : " | ";
      first = false;
      if (n.arity == 0) {
        out += head_name(n.head);
        continue;
      }
      out += "(" + head_name(n.head);
      for (ClassId k : n) out += " c" + std::to_string(find(k));
      out += ")";
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// E-matching

namespace {

using Substs = std::vector<Subst>;

struct Matcher {
  const EGraph& g;
  const Pattern& pat;
  std::function<std::optional<Head>(const Expr&)> head_of;

  // Extends every substitution in `in` by matching p against class c.
  Substs run(const Expr& p, ClassId c, Substs in) const {
    c = g.find(c);
    if (p.is(ExprKind::PatVar)) {
      std::size_t v = var_index(pat, p.name());
      Substs out;
      for (auto& s : in) {
        if (s[v] == kUnbound) {
          s[v] = c;
          out.push_back(std::move(s));
        } else if (g.find(s[v]) == c) {
          out.push_back(std::move(s));
        }
      }
      return out;
    }
    auto head = head_of(p);
    if (!head) return {};
    Substs out;
    for (const auto& n : g.nodes(c)) {
      if (n.head != *head || n.arity != p.args().size()) continue;
      Substs cur = in;
      for (std::size_t i = 0; i < n.arity && !cur.empty(); ++i) cur = run(p.args()[i], n.kids[i], std::move(cur));
      for (auto& s : cur) out.push_back(std::move(s));
    }
    return out;
  }
};

}  // namespace

std::vector<std::pair<ClassId, Subst>> EGraph::ematch(const Pattern& p) const {
  std::vector<std::pair<ClassId, Subst>> out;
  Matcher m{*this, p, [this](const Expr& e) { return lookup_head(e); }};
  Subst empty(p.vars.size(), kUnbound);
  auto emit = [&](ClassId c) {
    for (auto& s : m.run(p.source, c, Substs{empty})) out.emplace_back(find(c), std::move(s));
  };
  if (p.source.is(ExprKind::PatVar)) {
    for (ClassId c : classes()) emit(c);
    return out;
  }
  auto head = lookup_head(p.source);
  if (!head) return out;
  auto it = head_index_.find(*head);
  if (it == head_index_.end()) return out;
  std::vector<ClassId> roots;
  for (ClassId c : it->second) roots.push_back(find(c));
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  for (ClassId c : roots) emit(c);
  return out;
}

ClassId EGraph::instantiate(const Expr& p, const Pattern& pat, const Subst& s) {
  if (p.is(ExprKind::PatVar)) return find(s[var_index(pat, p.name())]);
  ENode n;
  switch (p.kind()) {
    case ExprKind::Var: n.head = {Head::Kind::Var, intern_var(p.name())}; break;
    case ExprKind::Lit: n.head = {Head::Kind::Lit, intern_lit(p.value())}; break;
    case ExprKind::RealOp: n.head = {Head::Kind::Real, static_cast<std::uint32_t>(p.fn())}; break;
    case ExprKind::FloatOp: n.head = {Head::Kind::Float, intern_op(p.name())}; break;
    default: throw TypeError("cannot instantiate `" + to_sexpr(p) + "`");
  }
  n.arity = static_cast<std::uint8_t>(p.args().size());
  for (std::size_t i = 0; i < p.args().size(); ++i) n.kids[i] = instantiate(p.args()[i], pat, s);
  return add_node(n);
}

namespace {

std::optional<Rational> fold_constant(RealFn fn, const std::vector<const Rational*>& args) {
  switch (fn) {
    case RealFn::Add: return Rational(*args[0] + *args[1]);
    case RealFn::Sub: return Rational(*args[0] - *args[1]);
    case RealFn::Mul: return Rational(*args[0] * *args[1]);
    case RealFn::Div:
      if (*args[1] == 0) return std::nullopt;
      return Rational(*args[0] / *args[1]);
    case RealFn::Neg: return Rational(-*args[0]);
    default: return std::nullopt;
  }
}

}  // namespace

SaturationReport EGraph::saturate(const std::vector<RewriteRule>& rules, SaturationLimits limits) {
  using Stop = SaturationReport::StopReason;
  std::size_t saved_limit = node_limit_;
  node_limit_ = std::min(node_limit_, limits.node_limit);
  struct Compiled {
    const RewriteRule* rule;
    Pattern lhs;
    Pattern rhs;
  };
  std::vector<Compiled> compiled;
  for (const auto& r : rules) {
    Pattern lhs = compile_pattern(r.lhs);
    Pattern rhs = compile_pattern(r.rhs, lhs.vars);
    if (rhs.vars.size() != lhs.vars.size()) throw TypeError("rule `" + r.name + "` binds new variables on its right side");
    compiled.push_back({&r, std::move(lhs), std::move(rhs)});
  }
  rebuild();
  SaturationReport report;
  auto finish = [&](Stop why, std::size_t iters) {
    rebuild();
    node_limit_ = saved_limit;
    report.stopped_by = why;
    report.iterations = iters;
    report.node_count = node_count();
    return report;
  };
  for (std::size_t iter = 0; iter < limits.iter_limit; ++iter) {
    if (node_count() >= node_limit_) return finish(Stop::NodeLimit, iter);
    // A graph that was already contradictory is saturated without checks.
    bool check = !unsound_;
    EGraph snapshot = check ? *this : EGraph();
    auto roll_back = [&] {
      *this = std::move(snapshot);
      return finish(Stop::Unsound, iter);
    };
    std::vector<std::vector<std::pair<ClassId, Subst>>> matches;
    matches.reserve(compiled.size());
    for (const auto& c : compiled) matches.push_back(ematch(c.lhs));
    std::size_t before = node_count();
    std::size_t unions = 0;
    try {
      for (std::size_t r = 0; r < compiled.size(); ++r) {
        const auto& c = compiled[r];
        for (const auto& [cls, subst] : matches[r]) {
          ClassId result;
          if (c.rule->kind == RewriteRule::Kind::Fold) {
            std::vector<const Rational*> consts;
            for (ClassId k : subst) {
              const Rational* q = class_constant(k);
              if (!q) break;
              consts.push_back(q);
            }
            if (consts.size() != subst.size()) continue;
            auto value = fold_constant(c.rule->lhs.fn(), consts);
            if (!value) continue;
            ENode n;
            n.head = {Head::Kind::Lit, intern_lit(*value)};
            result = add_node(n);
          } else {
            result = instantiate(c.rhs.source, c.rhs, subst);
          }
          if (find(result) != find(cls)) {
            merge(result, cls);
            ++unions;
          }
        }
      }
    } catch (const NodeLimitExceeded&) {
      rebuild();
      if (check && unsound_) return roll_back();
      return finish(Stop::NodeLimit, iter + 1);
    }
    rebuild();
    if (check && unsound_) return roll_back();
    if (unions == 0 && node_count() == before) return finish(Stop::Saturated, iter);
  }
  return finish(Stop::IterLimit, limits.iter_limit);
}

}  // namespace fpsel
