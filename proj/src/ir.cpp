#include <mpfr.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include "fpsel/ir.hpp"

namespace fpsel {

int precision(TypeTag t) {
  switch (t) {
    case TypeTag::B64: return 53;
    case TypeTag::B32: return 24;
    default: throw TypeError("type " + std::string(type_name(t)) + " has no precision");
  }
}

bool is_float(TypeTag t) { return t == TypeTag::B64 || t == TypeTag::B32; }

std::string_view type_name(TypeTag t) {
  switch (t) {
    case TypeTag::Real: return "real";
    case TypeTag::B64: return "binary64";
    case TypeTag::B32: return "binary32";
    case TypeTag::Bool: return "bool";
  }
  return "?";
}

std::optional<TypeTag> parse_type_name(std::string_view name) {
  if (name == "binary64") return TypeTag::B64;
  if (name == "binary32") return TypeTag::B32;
  if (name == "real") return TypeTag::Real;
  if (name == "bool") return TypeTag::Bool;
  return std::nullopt;
}

namespace {

struct FnInfo {
  RealFn fn;
  std::string_view name;
  int arity;
};

constexpr std::array<FnInfo, kRealFnCount> kFns{{
    {RealFn::Add, "+", 2},      {RealFn::Sub, "-", 2},     {RealFn::Mul, "*", 2},    {RealFn::Div, "/", 2},
    {RealFn::Neg, "neg", 1},    {RealFn::Sqrt, "sqrt", 1}, {RealFn::Fabs, "fabs", 1}, {RealFn::Exp, "exp", 1},
    {RealFn::Expm1, "expm1", 1}, {RealFn::Log, "log", 1},  {RealFn::Log1p, "log1p", 1}, {RealFn::Pow, "pow", 2},
    {RealFn::Sin, "sin", 1},    {RealFn::Cos, "cos", 1},   {RealFn::Tan, "tan", 1},  {RealFn::Fma, "fma", 3},
    {RealFn::Hypot, "hypot", 2},
}};

}  // namespace

int arity(RealFn fn) { return kFns[static_cast<int>(fn)].arity; }
std::string_view fn_name(RealFn fn) { return kFns[static_cast<int>(fn)].name; }

std::optional<RealFn> parse_fn_name(std::string_view name) {
  for (const auto& f : kFns)
    if (f.name == name) return f.fn;
  return std::nullopt;
}

std::string_view rel_name(CmpRel rel) {
  switch (rel) {
    case CmpRel::Lt: return "<";
    case CmpRel::Le: return "<=";
    case CmpRel::Eq: return "==";
    case CmpRel::Ne: return "!=";
    case CmpRel::Ge: return ">=";
    case CmpRel::Gt: return ">";
  }
  return "?";
}

std::optional<CmpRel> parse_rel_name(std::string_view name) {
  for (CmpRel r : {CmpRel::Lt, CmpRel::Le, CmpRel::Eq, CmpRel::Ne, CmpRel::Ge, CmpRel::Gt})
    if (rel_name(r) == name) return r;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Expr

Expr Expr::var(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Var;
  n->payload = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::lit(Rational value, TypeTag type) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Lit;
  n->type = type;
  value.canonicalize();
  n->payload = std::move(value);
  return Expr(std::move(n));
}

Expr Expr::real(RealFn fn, std::vector<Expr> args, TypeTag ctx) {
  if (static_cast<int>(args.size()) != arity(fn))
    throw TypeError("arity mismatch for `" + std::string(fn_name(fn)) + "`");
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::RealOp;
  n->fn = fn;
  n->type = ctx;
  n->args = std::move(args);
  return Expr(std::move(n));
}

Expr Expr::op(std::string name, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::FloatOp;
  n->payload = std::move(name);
  n->args = std::move(args);
  return Expr(std::move(n));
}

Expr Expr::if_(Expr cond, Expr then_branch, Expr else_branch) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::If;
  n->args = {std::move(cond), std::move(then_branch), std::move(else_branch)};
  return Expr(std::move(n));
}

Expr Expr::cmp(CmpRel rel, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Cmp;
  n->rel = rel;
  n->type = TypeTag::Bool;
  n->args = {std::move(lhs), std::move(rhs)};
  return Expr(std::move(n));
}

Expr Expr::pat(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::PatVar;
  n->payload = std::move(name);
  return Expr(std::move(n));
}

const std::string& Expr::name() const { return std::get<std::string>(node_->payload); }
const Rational& Expr::value() const { return std::get<Rational>(node_->payload); }

Expr Expr::with_args(std::vector<Expr> args) const {
  auto n = std::make_shared<Node>(*node_);
  n->args = std::move(args);
  return Expr(std::move(n));
}

std::size_t Expr::size() const {
  std::size_t s = 1;
  for (const auto& a : node_->args) s += a.size();
  return s;
}

bool Expr::operator==(const Expr& other) const {
  if (node_ == other.node_) return true;
  const Node& a = *node_;
  const Node& b = *other.node_;
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case ExprKind::Var:
    case ExprKind::PatVar:
    case ExprKind::FloatOp:
      if (std::get<std::string>(a.payload) != std::get<std::string>(b.payload)) return false;
      break;
    case ExprKind::Lit:
      if (a.type != b.type || std::get<Rational>(a.payload) != std::get<Rational>(b.payload)) return false;
      break;
    case ExprKind::RealOp:
      if (a.fn != b.fn || a.type != b.type) return false;
      break;
    case ExprKind::Cmp:
      if (a.rel != b.rel) return false;
      break;
    case ExprKind::If: break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (a.args[i] != b.args[i]) return false;
  return true;
}

namespace {

void write_sexpr(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case ExprKind::Var: out += e.name(); return;
    case ExprKind::PatVar: out += '?' + e.name(); return;
    case ExprKind::Lit:
      if (e.type() == TypeTag::B64) out += "#b64:";
      if (e.type() == TypeTag::B32) out += "#b32:";
      out += e.value().get_str();
      return;
    default: break;
  }
  out += '(';
  switch (e.kind()) {
    case ExprKind::RealOp:
      out += fn_name(e.fn());
      if (e.type() == TypeTag::B64) out += "@b64";
      if (e.type() == TypeTag::B32) out += "@b32";
      break;
    case ExprKind::FloatOp: out += e.name(); break;
    case ExprKind::If: out += "if"; break;
    case ExprKind::Cmp: out += rel_name(e.rel()); break;
    default: break;
  }
  for (const auto& a : e.args()) {
    out += ' ';
    write_sexpr(a, out);
  }
  out += ')';
}

}  // namespace

std::string to_sexpr(const Expr& e) {
  std::string out;
  write_sexpr(e, out);
  return out;
}

VarEnv param_env(const Program& p) {
  VarEnv env;
  for (const auto& prm : p.params) env[prm.name] = prm.type;
  return env;
}

const Expr& at_path(const Expr& root, const NodePath& path) {
  const Expr* cur = &root;
  for (auto i : path) cur = &cur->arg(i);
  return *cur;
}

namespace {

Expr replace_rec(const Expr& node, const NodePath& path, std::size_t depth, const Expr& replacement) {
  if (depth == path.size()) return replacement;
  std::vector<Expr> args = node.args();
  args.at(path[depth]) = replace_rec(args[path[depth]], path, depth + 1, replacement);
  return node.with_args(std::move(args));
}

}  // namespace

Expr replace_at(const Expr& root, const NodePath& path, const Expr& replacement) {
  return replace_rec(root, path, 0, replacement);
}

void free_vars(const Expr& e, std::vector<std::string>& out) {
  if (e.is(ExprKind::Var)) {
    if (std::find(out.begin(), out.end(), e.name()) == out.end()) out.push_back(e.name());
    return;
  }
  for (const auto& a : e.args()) free_vars(a, out);
}

// ---------------------------------------------------------------------------
// Numerals and rounding

std::optional<Rational> parse_numeral(std::string_view text) {
  if (text.empty()) return std::nullopt;
  auto slash = text.find('/');
  auto is_int = [](std::string_view s) {
    std::size_t i = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
    if (i >= s.size()) return false;
    for (; i < s.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
  };
  auto to_z = [](std::string_view s) {
    if (!s.empty() && s[0] == '+') s.remove_prefix(1);
    return mpz_class(std::string(s));
  };
  if (slash != std::string_view::npos) {
    auto num = text.substr(0, slash);
    auto den = text.substr(slash + 1);
    if (!is_int(num) || !is_int(den) || den[0] == '-' || den[0] == '+') return std::nullopt;
    mpz_class d = to_z(den);
    if (d == 0) return std::nullopt;
    Rational q(to_z(num), d);
    q.canonicalize();
    return q;
  }
  std::size_t i = 0;
  bool neg = false;
  if (text[0] == '-' || text[0] == '+') {
    neg = text[0] == '-';
    i = 1;
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_digit = false;
  for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
    digits += text[i];
    seen_digit = true;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
      digits += text[i];
      ++frac_digits;
      seen_digit = true;
    }
  }
  if (!seen_digit) return std::nullopt;
  long exponent = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    auto rest = text.substr(i + 1);
    if (!is_int(rest) || rest.size() > 9) return std::nullopt;
    exponent = std::stol(std::string(rest[0] == '+' ? rest.substr(1) : rest));
    i = text.size();
  }
  if (i != text.size()) return std::nullopt;
  long scale = exponent - frac_digits;
  mpz_class num(digits);
  mpz_class pow10;
  mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
  Rational q = scale >= 0 ? Rational(num * pow10) : Rational(num, pow10);
  q.canonicalize();
  if (neg) q = -q;
  return q;
}

namespace {

struct ExponentRange {
  mpfr_exp_t emin;
  mpfr_exp_t emax;
};

ExponentRange exponent_range(TypeTag t) {
  // MPFR significands lie in [1/2, 1).
  if (t == TypeTag::B64) return {-1073, 1024};
  return {-148, 128};
}

}  // namespace

double round_to_type(const Rational& value, TypeTag t) {
  int p = precision(t);
  auto range = exponent_range(t);
  mpfr_exp_t old_min = mpfr_get_emin();
  mpfr_exp_t old_max = mpfr_get_emax();
  mpfr_set_emin(range.emin);
  mpfr_set_emax(range.emax);
  mpfr_t x;
  mpfr_init2(x, p);
  int inex = mpfr_set_q(x, value.get_mpq_t(), MPFR_RNDN);
  mpfr_subnormalize(x, inex, MPFR_RNDN);
  double out = t == TypeTag::B64 ? mpfr_get_d(x, MPFR_RNDN) : static_cast<double>(mpfr_get_flt(x, MPFR_RNDN));
  mpfr_clear(x);
  mpfr_set_emin(old_min);
  mpfr_set_emax(old_max);
  if (out == 0.0) out = 0.0;
  return out;
}

Rational to_rational(double v) {
  Rational q(v);
  q.canonicalize();
  return q;
}

bool representable(const Rational& value, TypeTag t) {
  double r = round_to_type(value, t);
  return std::isfinite(r) && to_rational(r) == value;
}

}  // namespace fpsel
