#include <cmath>
#include <set>

#include "fpsel/ir.hpp"
#include "fpsel/sexpr.hpp"
#include "fpsel/target.hpp"
#include "internal.hpp"

namespace fpsel {

namespace {

std::optional<RealFn> surface_fn(std::string_view name, std::size_t nargs) {
  if (name == "-" && nargs == 1) return RealFn::Neg;
  if (name == "neg") return std::nullopt;
  return parse_fn_name(name);
}

class ProgramParser {
 public:
  explicit ProgramParser(std::set<std::string> bound) : bound_(std::move(bound)) {}

  Expr parse(const SExpr& s, TypeTag ctx) {
    if (s.kind == SExpr::Kind::String) fail_at(s, "unexpected string literal");
    if (s.is_atom()) {
      if (auto q = parse_numeral(s.text)) {
        double r = round_to_type(*q, ctx);
        if (!std::isfinite(r)) fail_at(s, "literal `" + s.text + "` overflows " + std::string(type_name(ctx)));
        return Expr::lit(to_rational(r), ctx);
      }
      if (!bound_.count(s.text)) fail_at(s, "unbound variable `" + s.text + "`");
      return Expr::var(s.text);
    }
    if (s.items.empty() || !s.items[0].is_atom()) fail_at(s, "expected an operator application");
    const std::string& head = s.items[0].text;
    std::size_t nargs = s.items.size() - 1;
    auto args = [&](TypeTag c) {
      std::vector<Expr> out;
      for (std::size_t i = 1; i < s.items.size(); ++i) out.push_back(parse(s.items[i], c));
      return out;
    };
    if (head == "if") {
      if (nargs != 3) fail_at(s, "arity mismatch: `if` takes 3 arguments");
      auto a = args(ctx);
      return Expr::if_(a[0], a[1], a[2]);
    }
    if (auto rel = parse_rel_name(head)) {
      if (nargs != 2) fail_at(s, "arity mismatch: `" + head + "` takes 2 arguments");
      auto a = args(ctx);
      return Expr::cmp(*rel, a[0], a[1]);
    }
    if (head == "!") return parse_annotation(s, ctx);
    auto fn = surface_fn(head, nargs);
    if (!fn) fail_at(s.items[0], "unknown operator `" + head + "`");
    if (static_cast<int>(nargs) != arity(*fn))
      fail_at(s, "arity mismatch: `" + head + "` takes " + std::to_string(arity(*fn)) + " arguments");
    return Expr::real(*fn, args(ctx), ctx);
  }

 private:
  Expr parse_annotation(const SExpr& s, TypeTag ctx) {
    std::size_t i = 1;
    std::optional<std::string> op;
    TypeTag inner = ctx;
    while (i + 1 < s.items.size() && s.items[i].is_atom() && !s.items[i].text.empty() && s.items[i].text[0] == ':') {
      const auto& key = s.items[i].text;
      const auto& val = s.items[i + 1];
      if (key == ":precision") {
        auto t = val.is_atom() ? parse_type_name(val.text) : std::nullopt;
        if (!t || !is_float(*t)) fail_at(val, "unknown precision");
        inner = *t;
      } else if (key == ":op") {
        if (!val.is_atom()) fail_at(val, "expected operator name");
        op = val.text;
      } else {
        fail_at(s.items[i], "unsupported annotation `" + key + "`");
      }
      i += 2;
    }
    std::vector<Expr> args;
    for (; i < s.items.size(); ++i) args.push_back(parse(s.items[i], inner));
    if (op) return Expr::op(*op, std::move(args));
    if (args.size() != 1) fail_at(s, "annotation must wrap exactly one expression");
    return args[0];
  }

  std::set<std::string> bound_;
};

}  // namespace

Program parse_program(std::string_view text) {
  SExpr top = read_one_sexpr(text);
  if (!top.is_list() || top.items.empty() || !top.items[0].is_atom("FPCore"))
    fail_at(top, "expected (FPCore (params...) :precision <type> body)");
  if (top.items.size() != 5 || !top.items[1].is_list() || !top.items[2].is_atom(":precision"))
    fail_at(top, "expected (FPCore (params...) :precision <type> body)");
  auto prec = top.items[3].is_atom() ? parse_type_name(top.items[3].text) : std::nullopt;
  if (!prec || !is_float(*prec)) fail_at(top.items[3], "precision must be binary64 or binary32");
  Program p{{}, Expr::var("_"), *prec};
  std::set<std::string> names;
  for (const auto& prm : top.items[1].items) {
    std::string name;
    TypeTag type = *prec;
    if (prm.is_atom()) {
      name = prm.text;
    } else if (prm.is_list() && prm.items.size() == 4 && prm.items[0].is_atom("!") &&
               prm.items[1].is_atom(":precision") && prm.items[3].is_atom()) {
      auto t = parse_type_name(prm.items[2].text);
      if (!t || !is_float(*t)) fail_at(prm.items[2], "unknown precision");
      name = prm.items[3].text;
      type = *t;
    } else {
      fail_at(prm, "expected a parameter name");
    }
    if (parse_numeral(name)) fail_at(prm, "parameter name cannot be a number");
    if (!names.insert(name).second) fail_at(prm, "duplicate parameter `" + name + "`");
    p.params.push_back({name, type});
  }
  ProgramParser parser(names);
  p.body = parser.parse(top.items[4], *prec);
  return p;
}

namespace detail {

Expr real_expr_from_sexpr(const SExpr& s) {
  if (s.kind == SExpr::Kind::String) fail_at(s, "unexpected string literal");
  if (s.is_atom()) {
    if (auto q = parse_numeral(s.text)) return Expr::lit(*q, TypeTag::Real);
    if (s.text.size() > 1 && s.text[0] == '?') return Expr::pat(s.text.substr(1));
    return Expr::var(s.text);
  }
  if (s.items.empty() || !s.items[0].is_atom()) fail_at(s, "expected an operator application");
  const std::string& head = s.items[0].text;
  std::vector<Expr> args;
  for (std::size_t i = 1; i < s.items.size(); ++i) args.push_back(real_expr_from_sexpr(s.items[i]));
  if (head == "if") {
    if (args.size() != 3) fail_at(s, "arity mismatch: `if` takes 3 arguments");
    return Expr::if_(args[0], args[1], args[2]);
  }
  if (auto rel = parse_rel_name(head)) {
    if (args.size() != 2) fail_at(s, "arity mismatch: `" + head + "` takes 2 arguments");
    return Expr::cmp(*rel, args[0], args[1]);
  }
  std::optional<RealFn> fn = head == "-" && args.size() == 1 ? RealFn::Neg : parse_fn_name(head);
  if (fn) {
    if (static_cast<int>(args.size()) != arity(*fn))
      fail_at(s, "arity mismatch: `" + head + "` takes " + std::to_string(arity(*fn)) + " arguments");
    return Expr::real(*fn, std::move(args));
  }
  return Expr::op(head, std::move(args));
}

Expr substitute(const Expr& e, const std::vector<std::string>& formals, const std::vector<Expr>& args) {
  if (e.is(ExprKind::Var)) {
    for (std::size_t i = 0; i < formals.size(); ++i)
      if (formals[i] == e.name()) return args[i];
    return e;
  }
  if (e.args().empty()) return e;
  std::vector<Expr> out;
  out.reserve(e.args().size());
  for (const auto& a : e.args()) out.push_back(substitute(a, formals, args));
  return e.with_args(std::move(out));
}

}  // namespace detail

Expr parse_real_expr(std::string_view text) { return detail::real_expr_from_sexpr(read_one_sexpr(text)); }

// ---------------------------------------------------------------------------

namespace {

Expr resolve_expr(const Expr& e, const TargetDesc& target) {
  switch (e.kind()) {
    case ExprKind::Var:
    case ExprKind::Lit: return e;
    case ExprKind::PatVar: throw TypeError("pattern variable in program");
    default: break;
  }
  std::vector<Expr> args;
  for (const auto& a : e.args()) args.push_back(resolve_expr(a, target));
  if (e.is(ExprKind::RealOp)) {
    if (!is_float(e.type())) throw TypeError("real operator `" + std::string(fn_name(e.fn())) + "` in program");
    std::string surface(fn_name(e.fn()));
    int matches = 0;
    const OperatorDef* found = nullptr;
    for (const auto& [name, op] : target.operators) {
      if (op.surface && *op.surface == surface && op.ret_type == e.type()) {
        ++matches;
        found = &op;
      }
    }
    if (matches > 1) throw TargetError("ambiguous surface operator `" + surface + "` at " + std::string(type_name(e.type())));
    if (!found) throw NoSuchOperator(surface, std::string(type_name(e.type())));
    return Expr::op(found->name, std::move(args));
  }
  if (e.is(ExprKind::FloatOp) && !target.find(e.name())) throw NoSuchOperator(e.name(), "any");
  return e.with_args(std::move(args));
}

}  // namespace

Program resolve(const Program& program, const TargetDesc& target) {
  Program out = program;
  out.body = resolve_expr(program.body, target);
  TypeTag t = typecheck(out.body, param_env(out), target);
  if (t != out.output)
    throw TypeError("program body has type " + std::string(type_name(t)) + ", expected " +
                    std::string(type_name(out.output)));
  return out;
}

Expr desugar(const Expr& e, const TargetDesc& target) {
  switch (e.kind()) {
    case ExprKind::Var:
    case ExprKind::PatVar: return e;
    case ExprKind::Lit: return e.type() == TypeTag::Real ? e : Expr::lit(e.value(), TypeTag::Real);
    default: break;
  }
  std::vector<Expr> args;
  args.reserve(e.args().size());
  for (const auto& a : e.args()) args.push_back(desugar(a, target));
  if (e.is(ExprKind::FloatOp)) {
    const OperatorDef& op = target.at(e.name());
    return detail::substitute(op.approx, op.formals, args);
  }
  if (e.is(ExprKind::RealOp)) return Expr::real(e.fn(), std::move(args));
  return e.with_args(std::move(args));
}

TypeTag typecheck(const Expr& e, const VarEnv& env, const TargetDesc& target) {
  switch (e.kind()) {
    case ExprKind::Var: {
      auto it = env.find(e.name());
      if (it == env.end()) throw TypeError("unbound variable `" + e.name() + "`");
      return it->second;
    }
    case ExprKind::PatVar: return TypeTag::Real;
    case ExprKind::Lit: return e.type();
    case ExprKind::RealOp:
      for (const auto& a : e.args()) {
        TypeTag t = typecheck(a, env, target);
        if (t != TypeTag::Real)
          throw TypeError("type mismatch in `" + to_sexpr(e) + "`: expected real, found " + std::string(type_name(t)));
      }
      return TypeTag::Real;
    case ExprKind::FloatOp: {
      const OperatorDef* op = target.find(e.name());
      if (!op) throw NoSuchOperator(e.name(), "any");
      if (op->arg_types.size() != e.args().size()) throw TypeError("arity mismatch for operator `" + e.name() + "`");
      for (std::size_t i = 0; i < e.args().size(); ++i) {
        TypeTag t = typecheck(e.args()[i], env, target);
        if (t != op->arg_types[i])
          throw TypeError("type mismatch in `" + to_sexpr(e) + "` argument " + std::to_string(i) + ": expected " +
                          std::string(type_name(op->arg_types[i])) + ", found " + std::string(type_name(t)));
      }
      return op->ret_type;
    }
    case ExprKind::Cmp: {
      TypeTag a = typecheck(e.arg(0), env, target);
      TypeTag b = typecheck(e.arg(1), env, target);
      if (a != b || a == TypeTag::Bool)
        throw TypeError("type mismatch in comparison `" + to_sexpr(e) + "`");
      return TypeTag::Bool;
    }
    case ExprKind::If: {
      if (typecheck(e.arg(0), env, target) != TypeTag::Bool)
        throw TypeError("type mismatch: `if` condition must be bool");
      TypeTag a = typecheck(e.arg(1), env, target);
      TypeTag b = typecheck(e.arg(2), env, target);
      if (a != b) throw TypeError("type mismatch: `if` branches differ");
      return a;
    }
  }
  throw TypeError("unreachable");
}

// ---------------------------------------------------------------------------

namespace {

class FpcoreWriter {
 public:
  explicit FpcoreWriter(const TargetDesc* target) : target_(target) {}

  void write(const Expr& e, TypeTag ctx, std::string& out) const {
    switch (e.kind()) {
      case ExprKind::Var: out += e.name(); return;
      case ExprKind::PatVar: out += "?" + e.name(); return;
      case ExprKind::Lit:
        if (e.type() == TypeTag::Real) {
          out += e.value().get_str();
        } else if (e.type() == ctx) {
          out += format_float(round_to_type(e.value(), ctx), ctx);
        } else {
          out += "(! :precision " + std::string(type_name(e.type())) + " " +
                 format_float(round_to_type(e.value(), e.type()), e.type()) + ")";
        }
        return;
      case ExprKind::RealOp: {
        TypeTag inner = is_float(e.type()) ? e.type() : ctx;
        bool wrap = inner != ctx;
        if (wrap) out += "(! :precision " + std::string(type_name(inner)) + " ";
        out += '(';
        out += e.fn() == RealFn::Neg ? "-" : std::string(fn_name(e.fn()));
        write_args(e, inner, out);
        out += ')';
        if (wrap) out += ')';
        return;
      }
      case ExprKind::FloatOp: {
        const OperatorDef* op = target_ ? target_->find(e.name()) : nullptr;
        if (op && op->surface && target_->find_surface(*op->surface, op->ret_type) == op &&
            parse_fn_name(*op->surface) && arity(*parse_fn_name(*op->surface)) == static_cast<int>(e.args().size())) {
          bool wrap = op->ret_type != ctx;
          if (wrap) out += "(! :precision " + std::string(type_name(op->ret_type)) + " ";
          out += '(';
          out += *op->surface == "neg" ? "-" : *op->surface;
          write_args(e, op->ret_type, out);
          out += ')';
          if (wrap) out += ')';
          return;
        }
        out += "(! :op " + e.name();
        write_args(e, op ? op->ret_type : ctx, out);
        out += ')';
        return;
      }
      case ExprKind::If:
        out += "(if";
        write_args(e, ctx, out);
        out += ')';
        return;
      case ExprKind::Cmp:
        out += "(";
        out += rel_name(e.rel());
        write_args(e, ctx, out);
        out += ')';
        return;
    }
  }

 private:
  void write_args(const Expr& e, TypeTag ctx, std::string& out) const {
    for (const auto& a : e.args()) {
      out += ' ';
      write(a, ctx, out);
    }
  }

  const TargetDesc* target_;
};

}  // namespace

std::string format_fpcore(const Program& p, const TargetDesc* target) {
  std::string out = "(FPCore (";
  for (std::size_t i = 0; i < p.params.size(); ++i) {
    if (i) out += ' ';
    if (p.params[i].type == p.output)
      out += p.params[i].name;
    else
      out += "(! :precision " + std::string(type_name(p.params[i].type)) + " " + p.params[i].name + ")";
  }
  out += ") :precision ";
  out += type_name(p.output);
  out += ' ';
  FpcoreWriter(target).write(p.body, p.output, out);
  out += ')';
  return out;
}

}  // namespace fpsel
