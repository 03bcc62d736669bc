#include <algorithm>
#include <set>

#include "fpsel/extraction.hpp"

namespace fpsel {

namespace {

constexpr TypeTag kFloatTypes[] = {TypeTag::B64, TypeTag::B32};

}  // namespace

Extractor::Extractor(const EGraph& g, const CostModel& cm, VarEnv env) : g_(g), cm_(cm), env_(std::move(env)) {
  std::vector<ClassId> classes = g_.classes();
  // Bellman-Ford style relaxation: entries only ever improve, and costs are
  // non-negative, so this reaches a fixed point.
  for (bool changed = true; changed;) {
    changed = false;
    for (ClassId c : classes) {
      for (const ENode& n : g_.nodes(c)) {
        for (TypeTag t : kFloatTypes) {
          auto cand = node_entry(n, t);
          if (!cand) continue;
          auto [it, fresh] = table_.try_emplace({c, t}, *cand);
          if (fresh || better(*cand, it->second)) {
            it->second = *cand;
            changed = true;
          }
        }
      }
    }
  }
}

std::optional<TypeTag> Extractor::node_type(const ENode& n) const {
  switch (n.head.kind) {
    case Head::Kind::Var: {
      auto it = env_.find(g_.var_name(n.head));
      if (it == env_.end() || !is_float(it->second)) return std::nullopt;
      return it->second;
    }
    case Head::Kind::Float: return cm_.target().at(g_.op_name(n.head)).ret_type;
    default: return std::nullopt;
  }
}

std::optional<Extractor::Entry> Extractor::node_entry(const ENode& n, TypeTag t) const {
  if (n.head.kind == Head::Kind::Lit) {
    if (!representable(g_.lit_value(n.head), t)) return std::nullopt;
    return Entry{cm_.literal_cost(t), 1, n};
  }
  if (node_type(n) != t) return std::nullopt;
  if (n.head.kind == Head::Kind::Var) return Entry{cm_.var_cost(), 1, n};
  const OperatorDef& op = cm_.target().at(g_.op_name(n.head));
  Entry e{op.cost, 1, n};
  for (std::uint8_t i = 0; i < n.arity; ++i) {
    const Entry* kid = entry(n.kids[i], op.arg_types[i]);
    if (!kid) return std::nullopt;
    e.cost += kid->cost;
    e.size += kid->size;
  }
  return e;
}

bool Extractor::better(const Entry& a, const Entry& b) const {
  if (a.cost != b.cost) return a.cost < b.cost;
  if (a.size != b.size) return a.size < b.size;
  if (a.node.head != b.node.head) {
    std::string an = g_.head_name(a.node.head), bn = g_.head_name(b.node.head);
    if (an != bn) return an < bn;
  }
  return std::lexicographical_compare(a.node.begin(), a.node.end(), b.node.begin(), b.node.end());
}

const Extractor::Entry* Extractor::entry(ClassId c, TypeTag t) const {
  auto it = table_.find({g_.find(c), t});
  return it == table_.end() ? nullptr : &it->second;
}

std::optional<double> Extractor::best_cost(ClassId c, TypeTag t) const {
  const Entry* e = entry(c, t);
  if (!e) return std::nullopt;
  return e->cost;
}

Expr Extractor::build(const ENode& n, TypeTag t) const {
  switch (n.head.kind) {
    case Head::Kind::Var: return Expr::var(g_.var_name(n.head));
    case Head::Kind::Lit: return Expr::lit(g_.lit_value(n.head), t);
    case Head::Kind::Float: {
      const OperatorDef& op = cm_.target().at(g_.op_name(n.head));
      std::vector<Expr> kids;
      for (std::uint8_t i = 0; i < n.arity; ++i) kids.push_back(extract(n.kids[i], op.arg_types[i]));
      return Expr::op(op.name, std::move(kids));
    }
    case Head::Kind::Real: break;
  }
  throw NoWellTypedProgram("real e-node cannot be extracted");
}

Expr Extractor::extract(ClassId c, TypeTag t) const {
  const Entry* e = entry(c, t);
  if (!e)
    throw NoWellTypedProgram("class c" + std::to_string(g_.find(c)) + " has no " + std::string(type_name(t)) +
                             " program");
  return build(e->node, t);
}

std::vector<Expr> Extractor::multi_extract(ClassId c, TypeTag t, std::size_t cap) const {
  struct Cand {
    Entry entry;
    Expr expr;
    std::string key;
  };
  std::vector<Cand> out;
  std::set<std::string> seen;
  for (const ENode& n : g_.nodes(c)) {
    auto e = node_entry(n, t);
    if (!e) continue;
    Expr x = build(n, t);
    std::string key = to_sexpr(x);
    if (!seen.insert(key).second) continue;
    out.push_back({*e, std::move(x), std::move(key)});
  }
  std::sort(out.begin(), out.end(), [](const Cand& a, const Cand& b) {
    if (a.entry.cost != b.entry.cost) return a.entry.cost < b.entry.cost;
    if (a.entry.size != b.entry.size) return a.entry.size < b.entry.size;
    return a.key < b.key;
  });
  if (out.size() > cap) out.erase(out.begin() + static_cast<std::ptrdiff_t>(cap), out.end());
  std::vector<Expr> result;
  result.reserve(out.size());
  for (auto& cnd : out) result.push_back(std::move(cnd.expr));
  return result;
}

}  // namespace fpsel
