#include <algorithm>
#include <set>

#include "doctest.h"
#include "fpsel/egraph.hpp"
#include "fpsel/oracle.hpp"
#include "fpsel/rules.hpp"
#include "support.hpp"

using namespace fpsel;

namespace {

const RewriteRule* find_rule(const std::vector<RewriteRule>& rules, const std::string& name) {
  auto it = std::find_if(rules.begin(), rules.end(), [&](const RewriteRule& r) { return r.name == name; });
  return it == rules.end() ? nullptr : &*it;
}

Expr bind_vars(const Expr& e, const std::map<std::string, Expr>& s) {
  if (e.is(ExprKind::PatVar)) return s.at(e.name());
  if (e.args().empty()) return e;
  std::vector<Expr> kids;
  for (const auto& a : e.args()) kids.push_back(bind_vars(a, s));
  return e.with_args(std::move(kids));
}

void collect_vars(const Expr& e, std::set<std::string>& out) {
  if (e.is(ExprKind::PatVar)) out.insert(e.name());
  for (const auto& a : e.args()) collect_vars(a, out);
}

}  // namespace

TEST_CASE("rule catalogue") {
  const auto& all = math_rules();
  for (const char* name : {"+-commute", "flip--", "div-to-mul-rcp", "fma-sub", "log1p-def", "fold:+"})
    CHECK_MESSAGE(find_rule(all, name), name);
  std::set<std::string> names;
  for (const auto& r : all) CHECK(names.insert(r.name).second);

  const auto& simp = simplifying_rules();
  CHECK(find_rule(simp, "*-one"));
  CHECK(find_rule(simp, "+-commute"));
  CHECK(find_rule(simp, "div-to-mul-rcp"));
  CHECK(find_rule(simp, "fold:*"));
  CHECK_FALSE(find_rule(simp, "flip--"));
  CHECK_FALSE(find_rule(simp, "distribute-+"));
  for (const auto& r : simp) {
    if (r.kind == RewriteRule::Kind::Fold || r.name == "div-to-mul-rcp") continue;
    INFO(r.name);
    CHECK(pattern_size(r.rhs) <= pattern_size(r.lhs));
  }
  CHECK(pattern_size(parse_real_expr("(+ ?a (* ?b 2))")) == 5);
}

TEST_CASE("every identity holds on random positive inputs") {
  Rng rng(77);
  for (const auto& r : math_rules()) {
    if (r.kind == RewriteRule::Kind::Fold) continue;
    CHECK(r.kind == RewriteRule::Kind::MathIdentity);
    std::set<std::string> vars;
    collect_vars(r.lhs, vars);
    int compared = 0, mismatched = 0;
    for (int k = 0; k < 200; ++k) {
      std::map<std::string, Expr> s;
      for (const auto& v : vars) s.emplace(v, Expr::lit(to_rational(0.05 + 4.0 * rng.unit()), TypeTag::Real));
      auto a = eval_real(bind_vars(r.lhs, s), {}, TypeTag::B64);
      auto b = eval_real(bind_vars(r.rhs, s), {}, TypeTag::B64);
      if (!a || !b) continue;
      ++compared;
      if (*a != *b) ++mismatched;
    }
    INFO(r.name);
    CHECK(compared > 100);
    CHECK(mismatched == 0);
  }
}

TEST_CASE("rule parsing") {
  auto rs = parse_rules("(rule a (+ ?x 0) ?x) (rule b (rcp.f32 ?x) (/ 1 ?x))");
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].kind == RewriteRule::Kind::MathIdentity);
  CHECK(rs[1].kind == RewriteRule::Kind::Lowering);
  CHECK_THROWS_AS(parse_rules("(rule a ?x (+ ?x ?y))"), ParseError);
  CHECK_THROWS_AS(parse_rules("(rule a ?x ?x) (rule a ?x ?x)"), ParseError);
  CHECK_THROWS_AS(parse_rules("(rule a ?x)"), ParseError);
  CHECK_THROWS_AS(parse_rules("(rule a (log ?x ?y) ?x)"), ParseError);
}

TEST_CASE("fold rules compute exact rationals") {
  EGraph g;
  ClassId root = g.add(parse_real_expr("(- (* 3 (/ 1 7)) (neg 2))"));
  g.saturate(fold_rules(), {});
  const Rational* c = g.class_constant(root);
  REQUIRE(c);
  CHECK(*c == Rational(17, 7));
}
