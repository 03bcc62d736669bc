#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fpsel/sexpr.hpp"
#include "fpsel/target.hpp"
#include "internal.hpp"

namespace fpsel {

const OperatorDef* TargetDesc::find(std::string_view op_name) const {
  auto it = operators.find(op_name);
  return it == operators.end() ? nullptr : &it->second;
}

const OperatorDef& TargetDesc::at(std::string_view op_name) const {
  if (const auto* op = find(op_name)) return *op;
  throw NoSuchOperator(std::string(op_name), "any");
}

const OperatorDef* TargetDesc::find_surface(std::string_view surface, TypeTag ret) const {
  for (const auto& [name, op] : operators)
    if (op.surface && *op.surface == surface && op.ret_type == ret) return &op;
  return nullptr;
}

double TargetDesc::literal_cost(TypeTag t) const {
  auto it = literal_costs.find(t);
  return it == literal_costs.end() ? 0.0 : it->second;
}

bool TargetDesc::has_codegen() const {
  return std::any_of(operators.begin(), operators.end(), [](const auto& kv) { return kv.second.codegen.has_value(); });
}

void TargetDesc::validate() const {
  std::set<std::pair<std::string, TypeTag>> surfaces;
  VarEnv real_env;
  for (const auto& [name, op] : operators) {
    if (name != op.name) throw TargetError("operator map key mismatch for `" + op.name + "`");
    if (op.formals.size() != op.arg_types.size())
      throw TargetError("operator `" + name + "`: formals and argument types differ in length");
    std::set<std::string> formal_set(op.formals.begin(), op.formals.end());
    if (formal_set.size() != op.formals.size()) throw TargetError("operator `" + name + "`: duplicate formal");
    for (auto t : op.arg_types)
      if (!is_float(t)) throw TargetError("operator `" + name + "`: argument types must be float types");
    if (!is_float(op.ret_type)) throw TargetError("operator `" + name + "`: return type must be a float type");
    if (!(op.cost >= 0.0) || !std::isfinite(op.cost)) throw TargetError("operator `" + name + "`: cost must be >= 0");
    if (op.impl.kind == OperatorImpl::Kind::RoundedAt &&
        (op.impl.bits < 1 || op.impl.bits > precision(op.ret_type)))
      throw TargetError("operator `" + name + "`: rounded-at bits out of range");
    std::vector<std::string> fv;
    free_vars(op.approx, fv);
    std::set<std::string> fv_set(fv.begin(), fv.end());
    if (fv_set != formal_set)
      throw TargetError("operator `" + name + "`: approx free variables must be exactly the formals");
    bool real_only = true;
    for_each_node(op.approx, [&](const NodePath&, const Expr& n) {
      if (!n.is(ExprKind::RealOp) && !n.is(ExprKind::Var) && !(n.is(ExprKind::Lit) && n.type() == TypeTag::Real))
        real_only = false;
    });
    if (!real_only) throw TargetError("operator `" + name + "`: approx must be a real expression");
    real_env.clear();
    for (const auto& f : op.formals) real_env[f] = TypeTag::Real;
    try {
      if (typecheck(op.approx, real_env, *this) != TypeTag::Real)
        throw TargetError("operator `" + name + "`: approx is not real-typed");
    } catch (const TypeError& err) {
      throw TargetError("operator `" + name + "`: ill-typed approx: " + err.what());
    }
    if (op.surface && !surfaces.insert({*op.surface, op.ret_type}).second)
      throw TargetError("surface operator `" + *op.surface + "` at " + std::string(type_name(op.ret_type)) +
                        " claimed twice");
  }
  for (const auto& [t, c] : literal_costs)
    if (!is_float(t) || !(c >= 0.0)) throw TargetError("literal costs must be >= 0 and keyed by float types");
  if (var_cost_setting && !(*var_cost_setting >= 0.0)) throw TargetError("var cost must be >= 0");
  if (if_cost_setting && !(if_cost_setting->overhead >= 0.0)) throw TargetError("if cost must be >= 0");
}

// ---------------------------------------------------------------------------
// Target files

namespace {

double parse_cost(const SExpr& s) {
  if (!s.is_atom()) fail_at(s, "expected a number");
  auto q = parse_numeral(s.text);
  if (!q) fail_at(s, "expected a number");
  return q->get_d();
}

TypeTag parse_float_type(const SExpr& s) {
  auto t = s.is_atom() ? parse_type_name(s.text) : std::nullopt;
  if (!t || !is_float(*t)) fail_at(s, "expected binary64 or binary32");
  return *t;
}

OperatorDef parse_operator(const SExpr& form) {
  // (define-operator (NAME [ARG TYPE]...) RETTYPE #:approx E ...)
  if (form.items.size() < 3 || !form.items[1].is_list() || form.items[1].items.empty() ||
      !form.items[1].items[0].is_atom())
    fail_at(form, "expected (define-operator (NAME [ARG TYPE]...) RETTYPE ...)");
  OperatorDef op;
  const auto& sig = form.items[1];
  op.name = sig.items[0].text;
  for (std::size_t i = 1; i < sig.items.size(); ++i) {
    const auto& a = sig.items[i];
    if (!a.is_list() || a.items.size() != 2 || !a.items[0].is_atom()) fail_at(a, "expected [ARG TYPE]");
    op.formals.push_back(a.items[0].text);
    op.arg_types.push_back(parse_float_type(a.items[1]));
  }
  op.ret_type = parse_float_type(form.items[2]);
  bool have_approx = false;
  std::set<std::string> seen;
  for (std::size_t i = 3; i < form.items.size(); i += 2) {
    const auto& key = form.items[i];
    if (!key.is_atom() || key.text.rfind("#:", 0) != 0) fail_at(key, "expected a #:keyword");
    if (i + 1 >= form.items.size()) fail_at(key, "missing value for " + key.text);
    if (!seen.insert(key.text).second) fail_at(key, "duplicate " + key.text);
    const auto& val = form.items[i + 1];
    if (key.text == "#:approx") {
      op.approx = detail::real_expr_from_sexpr(val);
      have_approx = true;
    } else if (key.text == "#:surface") {
      if (!val.is_atom()) fail_at(val, "expected a surface name");
      op.surface = val.text;
    } else if (key.text == "#:cost") {
      op.cost = parse_cost(val);
    } else if (key.text == "#:impl") {
      if (!val.is_list() || val.items.size() != 2 || !val.items[0].is_atom("rounded-at") || !val.items[1].is_atom())
        fail_at(val, "expected (rounded-at N)");
      int bits = 0;
      const auto& t = val.items[1].text;
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), bits);
      if (ec != std::errc() || p != t.data() + t.size()) fail_at(val.items[1], "expected an integer");
      op.impl = OperatorImpl::rounded_at(bits);
    } else if (key.text == "#:codegen") {
      if (val.kind != SExpr::Kind::String) fail_at(val, "expected a template string");
      op.codegen = val.text;
    } else {
      fail_at(key, "unknown operator keyword " + key.text);
    }
  }
  if (!have_approx) fail_at(form, "operator `" + op.name + "` has no #:approx");
  return op;
}

struct TargetForm {
  std::string name;
  std::vector<std::string> imports;
  std::optional<IfCost> if_cost;
  std::map<TypeTag, double> literals;
  std::optional<double> var_cost;
  std::vector<std::string> operators;
};

TargetForm parse_target_form(const SExpr& form) {
  if (form.items.size() < 2 || !form.items[1].is_atom()) fail_at(form, "expected (define-target NAME ...)");
  TargetForm t;
  t.name = form.items[1].text;
  bool have_ops = false;
  std::set<std::string> seen;
  for (std::size_t i = 2; i < form.items.size();) {
    const auto& key = form.items[i];
    if (!key.is_atom() || key.text.rfind("#:", 0) != 0) fail_at(key, "expected a #:keyword");
    if (!seen.insert(key.text).second) fail_at(key, "duplicate " + key.text);
    if (key.text == "#:import") {
      ++i;
      while (i < form.items.size() && form.items[i].is_atom() && form.items[i].text.rfind("#:", 0) != 0)
        t.imports.push_back(form.items[i++].text);
      continue;
    }
    if (i + 1 >= form.items.size()) fail_at(key, "missing value for " + key.text);
    const auto& val = form.items[i + 1];
    if (key.text == "#:if-cost") {
      if (!val.is_list() || val.items.size() != 2 || !val.items[0].is_atom()) fail_at(val, "expected (max N) or (sum N)");
      IfCost c;
      if (val.items[0].text == "max")
        c.mode = IfMode::Scalar;
      else if (val.items[0].text == "sum")
        c.mode = IfMode::Vector;
      else
        fail_at(val.items[0], "expected max or sum");
      c.overhead = parse_cost(val.items[1]);
      t.if_cost = c;
    } else if (key.text == "#:literals") {
      if (!val.is_list()) fail_at(val, "expected ([TYPE COST]...)");
      for (const auto& entry : val.items) {
        if (!entry.is_list() || entry.items.size() != 2) fail_at(entry, "expected [TYPE COST]");
        t.literals[parse_float_type(entry.items[0])] = parse_cost(entry.items[1]);
      }
    } else if (key.text == "#:var-cost") {
      t.var_cost = parse_cost(val);
    } else if (key.text == "#:operators") {
      if (!val.is_list()) fail_at(val, "expected (NAME...)");
      for (const auto& n : val.items) {
        if (!n.is_atom()) fail_at(n, "expected an operator name");
        t.operators.push_back(n.text);
      }
      have_ops = true;
    } else {
      fail_at(key, "unknown target keyword " + key.text);
    }
    i += 2;
  }
  if (!have_ops) fail_at(form, "target `" + t.name + "` has no #:operators");
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TargetError("cannot read target file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TargetLoader {
 public:
  TargetDesc load_file(const std::filesystem::path& path) {
    auto key = std::filesystem::weakly_canonical(path).string();
    if (std::find(stack_.begin(), stack_.end(), key) != stack_.end())
      throw TargetError("cyclic import involving " + path.string());
    stack_.push_back(key);
    TargetDesc t = load_text(read_file(path), path.parent_path());
    stack_.pop_back();
    return t;
  }

  TargetDesc load_text(std::string_view text, const std::filesystem::path& dir) {
    std::map<std::string, OperatorDef> defs;
    std::optional<TargetForm> form;
    for (const auto& s : read_sexprs(text)) {
      if (!s.is_list() || s.items.empty() || !s.items[0].is_atom()) fail_at(s, "expected a definition");
      if (s.items[0].text == "define-operator") {
        OperatorDef op = parse_operator(s);
        if (defs.count(op.name)) throw TargetError("duplicate operator `" + op.name + "`");
        defs.emplace(op.name, std::move(op));
      } else if (s.items[0].text == "define-target") {
        if (form) fail_at(s, "more than one define-target in file");
        form = parse_target_form(s);
      } else {
        fail_at(s, "unknown form `" + s.items[0].text + "`");
      }
    }
    if (!form) throw TargetError("no define-target form");

    TargetDesc base;
    for (const auto& imp : form->imports) base = compose(base, load_file(dir / (imp + ".tgt")));

    TargetDesc own;
    own.name = form->name;
    own.imports = form->imports;
    own.literal_costs = form->literals;
    own.var_cost_setting = form->var_cost;
    own.if_cost_setting = form->if_cost;
    std::set<std::string> listed;
    for (const auto& name : form->operators) {
      if (!listed.insert(name).second) throw TargetError("duplicate operator `" + name + "` in #:operators");
      auto it = defs.find(name);
      if (it != defs.end())
        own.operators.emplace(name, it->second);
      else if (!base.find(name))
        throw TargetError("operator `" + name + "` listed but not defined");
    }
    TargetDesc out = compose(base, own);
    out.imports = form->imports;
    return out;
  }

 private:
  std::vector<std::string> stack_;
};

}  // namespace

TargetDesc compose(const TargetDesc& base, const TargetDesc& overlay) {
  TargetDesc out = base;
  if (!overlay.name.empty()) out.name = overlay.name;
  for (const auto& [name, op] : overlay.operators) out.operators.insert_or_assign(name, op);
  for (const auto& [t, c] : overlay.literal_costs) out.literal_costs[t] = c;
  if (overlay.var_cost_setting) out.var_cost_setting = overlay.var_cost_setting;
  if (overlay.if_cost_setting) out.if_cost_setting = overlay.if_cost_setting;
  for (const auto& imp : overlay.imports)
    if (std::find(out.imports.begin(), out.imports.end(), imp) == out.imports.end()) out.imports.push_back(imp);
  out.validate();
  return out;
}

TargetDesc parse_target(std::string_view text, const std::filesystem::path& search_dir) {
  return TargetLoader().load_text(text, search_dir);
}

TargetDesc load_target(const std::filesystem::path& path) { return TargetLoader().load_file(path); }

// ---------------------------------------------------------------------------

std::vector<RewriteRule> derive_rules(const TargetDesc& target) {
  std::vector<RewriteRule> rules;
  for (const auto& [name, op] : target.operators) {
    std::vector<Expr> pats;
    for (const auto& f : op.formals) pats.push_back(Expr::pat(f));
    Expr float_side = Expr::op(name, pats);
    Expr real_side = detail::substitute(op.approx, op.formals, pats);
    rules.push_back({"lift:" + name, float_side, real_side, RewriteRule::Kind::Lifting});
    rules.push_back({"lower:" + name, real_side, float_side, RewriteRule::Kind::Lowering});
  }
  return rules;
}

// ---------------------------------------------------------------------------
// Code generation

std::string format_float(double v, TypeTag t) {
  char buf[64];
  std::to_chars_result r;
  if (t == TypeTag::B32)
    r = std::to_chars(buf, buf + sizeof buf, static_cast<float>(v));
  else
    r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

std::string apply_template(const std::string& tmpl, const std::vector<std::string>& args) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string::npos) {
        auto idx_text = tmpl.substr(i + 1, close - i - 1);
        std::size_t idx = 0;
        auto [p, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
        if (ec == std::errc() && p == idx_text.data() + idx_text.size() && idx < args.size()) {
          out += args[idx];
          i = close;
          continue;
        }
      }
    }
    out += tmpl[i];
  }
  return out;
}

std::string code_rec(const Expr& e, const TargetDesc& target, bool require) {
  switch (e.kind()) {
    case ExprKind::Var: return e.name();
    case ExprKind::Lit: {
      if (!is_float(e.type())) throw TypeError("real literal in target code");
      std::string s = format_float(round_to_type(e.value(), e.type()), e.type());
      if (s[0] == '-') s = "(" + s + ")";
      return s;
    }
    case ExprKind::FloatOp: {
      const OperatorDef& op = target.at(e.name());
      std::vector<std::string> args;
      for (const auto& a : e.args()) args.push_back(code_rec(a, target, require));
      if (op.codegen) return apply_template(*op.codegen, args);
      if (require) throw TargetError("operator `" + op.name + "` has no codegen template");
      std::string out = op.name + "(";
      for (std::size_t i = 0; i < args.size(); ++i) out += (i ? ", " : "") + args[i];
      return out + ")";
    }
    case ExprKind::Cmp:
      return "(" + code_rec(e.arg(0), target, require) + " " + std::string(rel_name(e.rel())) + " " +
             code_rec(e.arg(1), target, require) + ")";
    case ExprKind::If:
      return "(" + code_rec(e.arg(0), target, require) + " ? " + code_rec(e.arg(1), target, require) + " : " +
             code_rec(e.arg(2), target, require) + ")";
    default: throw TypeError("unresolved node `" + to_sexpr(e) + "` in target code");
  }
}

bool wrapped_in_parens(const std::string& s) {
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') return false;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (depth == 0 && i + 1 < s.size()) return false;
  }
  return true;
}

}  // namespace

std::string format_target_code(const Program& p, const TargetDesc& target, bool require_templates) {
  std::string s = code_rec(p.body, target, require_templates);
  if (wrapped_in_parens(s)) s = s.substr(1, s.size() - 2);
  return s;
}

}  // namespace fpsel
