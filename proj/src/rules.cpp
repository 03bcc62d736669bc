#include <fstream>
#include <set>
#include <sstream>

#include "fpsel/rules.hpp"
#include "fpsel/sexpr.hpp"
#include "internal.hpp"

namespace fpsel {

namespace {

constexpr std::string_view kMathRules = R"(
; commutativity and associativity
(rule +-commute (+ ?a ?b) (+ ?b ?a))
(rule *-commute (* ?a ?b) (* ?b ?a))
(rule +-assoc-l (+ ?a (+ ?b ?c)) (+ (+ ?a ?b) ?c))
(rule +-assoc-r (+ (+ ?a ?b) ?c) (+ ?a (+ ?b ?c)))
(rule *-assoc-l (* ?a (* ?b ?c)) (* (* ?a ?b) ?c))
(rule *-assoc-r (* (* ?a ?b) ?c) (* ?a (* ?b ?c)))

; distributivity
(rule distribute-+ (* ?a (+ ?b ?c)) (+ (* ?a ?b) (* ?a ?c)))
(rule factor-+ (+ (* ?a ?b) (* ?a ?c)) (* ?a (+ ?b ?c)))
(rule distribute-- (* ?a (- ?b ?c)) (- (* ?a ?b) (* ?a ?c)))
(rule factor-- (- (* ?a ?b) (* ?a ?c)) (* ?a (- ?b ?c)))

; identities and annihilators
(rule +-zero (+ ?a 0) ?a)
(rule --zero (- ?a 0) ?a)
(rule *-one (* ?a 1) ?a)
(rule *-zero (* ?a 0) 0)
(rule /-one (/ ?a 1) ?a)
(rule --self (- ?a ?a) 0)
(rule /-self (/ ?a ?a) 1)

; negation
(rule sub-to-neg (- ?a ?b) (+ ?a (neg ?b)))
(rule neg-to-sub (+ ?a (neg ?b)) (- ?a ?b))
(rule neg-neg (neg (neg ?a)) ?a)
(rule neg-*-push (neg (* ?a ?b)) (* (neg ?a) ?b))
(rule neg-*-pull (* (neg ?a) ?b) (neg (* ?a ?b)))
(rule neg-/-push (neg (/ ?a ?b)) (/ (neg ?a) ?b))
(rule neg-sub (neg (- ?a ?b)) (- ?b ?a))
(rule sub-neg (- ?a (neg ?b)) (+ ?a ?b))
(rule neg-as-sub (neg ?a) (- 0 ?a))
(rule sub-from-zero (- 0 ?a) (neg ?a))
(rule *-neg-one (* ?a -1) (neg ?a))

; fractions
(rule div-to-mul-rcp (/ ?a ?b) (* ?a (/ 1 ?b)))
(rule mul-rcp-to-div (* ?a (/ 1 ?b)) (/ ?a ?b))
(rule div-div (/ (/ ?a ?b) ?c) (/ ?a (* ?b ?c)))
(rule mul-div-assoc (* ?a (/ ?b ?c)) (/ (* ?a ?b) ?c))
(rule div-mul-assoc (/ (* ?a ?b) ?c) (* ?a (/ ?b ?c)))
(rule add-fractions (+ (/ ?a ?c) (/ ?b ?c)) (/ (+ ?a ?b) ?c))
(rule split-fraction (/ (+ ?a ?b) ?c) (+ (/ ?a ?c) (/ ?b ?c)))
(rule sub-fractions (- (/ ?a ?c) (/ ?b ?c)) (/ (- ?a ?b) ?c))
(rule rcp-rcp (/ 1 (/ 1 ?a)) ?a)

; cancellation
(rule flip-- (- ?a ?b) (/ (- (* ?a ?a) (* ?b ?b)) (+ ?a ?b)))
(rule flip-+ (+ ?a ?b) (/ (- (* ?a ?a) (* ?b ?b)) (- ?a ?b)))
(rule diff-squares (- (* ?a ?a) (* ?b ?b)) (* (+ ?a ?b) (- ?a ?b)))
(rule add-sub-cancel (- (+ ?a ?b) ?a) ?b)
(rule sub-sub-cancel (- ?a (- ?a ?b)) ?b)
(rule sub-sub-l (- ?a (- ?b ?c)) (+ (- ?a ?b) ?c))
(rule sub-sub-r (- (- ?a ?b) ?c) (- ?a (+ ?b ?c)))
(rule sub-+ (- ?a (+ ?b ?c)) (- (- ?a ?b) ?c))

; square roots and powers
(rule sqrt-square (sqrt (* ?a ?a)) (fabs ?a))
(rule sqrt-mul-self (* (sqrt ?a) (sqrt ?a)) ?a)
(rule sqrt-prod (* (sqrt ?a) (sqrt ?b)) (sqrt (* ?a ?b)))
(rule sqrt-unprod (sqrt (* ?a ?b)) (* (sqrt ?a) (sqrt ?b)))
(rule sqrt-quot (/ (sqrt ?a) (sqrt ?b)) (sqrt (/ ?a ?b)))
(rule rcp-sqrt (/ 1 (sqrt ?a)) (sqrt (/ 1 ?a)))
(rule square-to-pow (* ?a ?a) (pow ?a 2))
(rule pow-to-square (pow ?a 2) (* ?a ?a))
(rule pow-one (pow ?a 1) ?a)
(rule pow-zero (pow ?a 0) 1)
(rule pow-half (pow ?a 1/2) (sqrt ?a))
(rule sqrt-to-pow (sqrt ?a) (pow ?a 1/2))
(rule pow-prod (* (pow ?a ?b) (pow ?a ?c)) (pow ?a (+ ?b ?c)))
(rule pow-neg-one (pow ?a -1) (/ 1 ?a))
(rule fabs-fabs (fabs (fabs ?a)) (fabs ?a))
(rule fabs-neg (fabs (neg ?a)) (fabs ?a))
(rule fabs-square (fabs (* ?a ?a)) (* ?a ?a))
(rule hypot-def (sqrt (+ (* ?a ?a) (* ?b ?b))) (hypot ?a ?b))
(rule hypot-undef (hypot ?a ?b) (sqrt (+ (* ?a ?a) (* ?b ?b))))

; exponentials and logarithms
(rule log-prod (log (* ?a ?b)) (+ (log ?a) (log ?b)))
(rule log-quot (log (/ ?a ?b)) (- (log ?a) (log ?b)))
(rule sum-log (+ (log ?a) (log ?b)) (log (* ?a ?b)))
(rule diff-log (- (log ?a) (log ?b)) (log (/ ?a ?b)))
(rule log-rcp (log (/ 1 ?a)) (neg (log ?a)))
(rule log-pow (log (pow ?a ?b)) (* ?b (log ?a)))
(rule log-exp (log (exp ?a)) ?a)
(rule exp-log (exp (log ?a)) ?a)
(rule exp-sum (exp (+ ?a ?b)) (* (exp ?a) (exp ?b)))
(rule prod-exp (* (exp ?a) (exp ?b)) (exp (+ ?a ?b)))
(rule exp-diff (exp (- ?a ?b)) (/ (exp ?a) (exp ?b)))
(rule exp-neg (exp (neg ?a)) (/ 1 (exp ?a)))
(rule exp-zero (exp 0) 1)
(rule log-one (log 1) 0)
(rule log1p-def (log (+ 1 ?a)) (log1p ?a))
(rule log1p-def-r (log (+ ?a 1)) (log1p ?a))
(rule log1p-undef (log1p ?a) (log (+ 1 ?a)))
(rule expm1-def (- (exp ?a) 1) (expm1 ?a))
(rule expm1-undef (expm1 ?a) (- (exp ?a) 1))
(rule pow-to-exp (pow ?a ?b) (exp (* ?b (log ?a))))
(rule exp-to-pow (exp (* ?b (log ?a))) (pow ?a ?b))

; fused multiply-add
(rule fma-def (+ (* ?a ?b) ?c) (fma ?a ?b ?c))
(rule fma-undef (fma ?a ?b ?c) (+ (* ?a ?b) ?c))
(rule fma-sub (- (* ?a ?b) ?c) (fma ?a ?b (neg ?c)))
(rule fma-neg (- ?c (* ?a ?b)) (fma (neg ?a) ?b ?c))

; trigonometry
(rule sin-neg (sin (neg ?a)) (neg (sin ?a)))
(rule cos-neg (cos (neg ?a)) (cos ?a))
(rule tan-quot (tan ?a) (/ (sin ?a) (cos ?a)))
(rule quot-tan (/ (sin ?a) (cos ?a)) (tan ?a))
(rule pythag-sin (- 1 (* (cos ?a) (cos ?a))) (* (sin ?a) (sin ?a)))
(rule pythag-cos (- 1 (* (sin ?a) (sin ?a))) (* (cos ?a) (cos ?a)))
(rule pythag (+ (* (sin ?a) (sin ?a)) (* (cos ?a) (cos ?a))) 1)
(rule sin-double (sin (* 2 ?a)) (* 2 (* (sin ?a) (cos ?a))))
(rule sin-double-r (* 2 (* (sin ?a) (cos ?a))) (sin (* 2 ?a)))
)";

// Same-purpose rewrites admitted to the simplifying set although they grow.
const std::set<std::string, std::less<>> kSimplifyingAllowList = {"div-to-mul-rcp"};

std::vector<RewriteRule> build_math_rules() {
  auto rules = parse_rules(kMathRules);
  for (auto& r : fold_rules()) rules.push_back(std::move(r));
  return rules;
}

std::vector<RewriteRule> build_simplifying_rules() {
  std::vector<RewriteRule> out;
  for (const auto& r : math_rules()) {
    bool shrinks = pattern_size(r.rhs) <= pattern_size(r.lhs);
    if (r.kind == RewriteRule::Kind::Fold || shrinks || kSimplifyingAllowList.count(r.name)) out.push_back(r);
  }
  for (const auto& r : out)
    if (r.kind != RewriteRule::Kind::Fold && !kSimplifyingAllowList.count(r.name) &&
        pattern_size(r.rhs) > pattern_size(r.lhs))
      throw std::logic_error("simplifying rule `" + r.name + "` grows the term");
  return out;
}

bool real_only(const Expr& e) {
  if (e.is(ExprKind::FloatOp)) return false;
  for (const auto& a : e.args())
    if (!real_only(a)) return false;
  return true;
}

void pattern_vars(const Expr& e, std::set<std::string>& out) {
  if (e.is(ExprKind::PatVar)) out.insert(e.name());
  for (const auto& a : e.args()) pattern_vars(a, out);
}

}  // namespace

std::size_t pattern_size(const Expr& e) { return e.size(); }

std::vector<RewriteRule> fold_rules() {
  std::vector<RewriteRule> out;
  for (const char* text : {"(+ ?a ?b)", "(- ?a ?b)", "(* ?a ?b)", "(/ ?a ?b)", "(neg ?a)"}) {
    Expr lhs = parse_real_expr(text);
    out.push_back({"fold:" + std::string(fn_name(lhs.fn())), lhs, lhs, RewriteRule::Kind::Fold});
  }
  return out;
}

const std::vector<RewriteRule>& math_rules() {
  static const std::vector<RewriteRule> rules = build_math_rules();
  return rules;
}

const std::vector<RewriteRule>& simplifying_rules() {
  static const std::vector<RewriteRule> rules = build_simplifying_rules();
  return rules;
}

std::vector<RewriteRule> parse_rules(std::string_view text) {
  std::vector<RewriteRule> out;
  std::set<std::string> names;
  for (const auto& s : read_sexprs(text)) {
    if (!s.is_list() || s.items.size() != 4 || !s.items[0].is_atom("rule") || !s.items[1].is_atom())
      fail_at(s, "expected (rule NAME LHS RHS)");
    RewriteRule r;
    r.name = s.items[1].text;
    if (!names.insert(r.name).second) fail_at(s.items[1], "duplicate rule `" + r.name + "`");
    r.lhs = detail::real_expr_from_sexpr(s.items[2]);
    r.rhs = detail::real_expr_from_sexpr(s.items[3]);
    std::set<std::string> lv, rv;
    pattern_vars(r.lhs, lv);
    pattern_vars(r.rhs, rv);
    for (const auto& v : rv)
      if (!lv.count(v)) fail_at(s.items[3], "pattern variable ?" + v + " is unbound on the left");
    r.kind = real_only(r.lhs) && real_only(r.rhs) ? RewriteRule::Kind::MathIdentity : RewriteRule::Kind::Lowering;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RewriteRule> load_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read rule file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str());
}

}  // namespace fpsel
