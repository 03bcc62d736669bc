#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <gmpxx.h>

#include "fpsel/error.hpp"

namespace fpsel {

using Rational = mpq_class;

enum class TypeTag : std::uint8_t { Real, B64, B32, Bool };

/// Significand bits of a float type (53 for binary64, 24 for binary32).
/// Throws TypeError for Real and Bool.
int precision(TypeTag t);
bool is_float(TypeTag t);
std::string_view type_name(TypeTag t);
std::optional<TypeTag> parse_type_name(std::string_view name);

/// Real functions understood by the oracle and the rewrite engine.
enum class RealFn : std::uint8_t {
  Add, Sub, Mul, Div, Neg, Sqrt, Fabs, Exp, Expm1, Log, Log1p, Pow, Sin, Cos, Tan, Fma, Hypot,
};
inline constexpr int kRealFnCount = 17;

int arity(RealFn fn);
/// Name used in FPCore and in target-file approx expressions. Neg prints as "neg".
std::string_view fn_name(RealFn fn);
std::optional<RealFn> parse_fn_name(std::string_view name);

enum class CmpRel : std::uint8_t { Lt, Le, Eq, Ne, Ge, Gt };
std::string_view rel_name(CmpRel rel);
std::optional<CmpRel> parse_rel_name(std::string_view name);

enum class ExprKind : std::uint8_t { Var, Lit, RealOp, FloatOp, If, Cmp, PatVar };

/// Immutable expression tree shared by the parser, the rewrite engine and the
/// evaluators. Copies are cheap (shared structure).
///
/// RealOp nodes carry a context type: Real for genuine real-number terms, or a
/// float type for surface-form programs that have not been resolved yet.
class Expr {
 public:
  static Expr var(std::string name);
  static Expr lit(Rational value, TypeTag type);
  static Expr real(RealFn fn, std::vector<Expr> args, TypeTag ctx = TypeTag::Real);
  static Expr op(std::string name, std::vector<Expr> args);
  static Expr if_(Expr cond, Expr then_branch, Expr else_branch);
  static Expr cmp(CmpRel rel, Expr lhs, Expr rhs);
  static Expr pat(std::string name);

  ExprKind kind() const { return node_->kind; }
  bool is(ExprKind k) const { return node_->kind == k; }

  /// Var, PatVar and FloatOp name.
  const std::string& name() const;
  const Rational& value() const;
  /// Lit type, or the context type of a RealOp.
  TypeTag type() const { return node_->type; }
  RealFn fn() const { return node_->fn; }
  CmpRel rel() const { return node_->rel; }
  const std::vector<Expr>& args() const { return node_->args; }
  const Expr& arg(std::size_t i) const { return node_->args.at(i); }

  Expr with_args(std::vector<Expr> args) const;

  std::size_t size() const;
  bool operator==(const Expr& other) const;
  bool operator!=(const Expr& other) const { return !(*this == other); }
  /// Identity of the shared node; equal pointers imply structural equality.
  const void* id() const { return node_.get(); }

 private:
  struct Node {
    ExprKind kind;
    TypeTag type = TypeTag::Real;
    RealFn fn = RealFn::Add;
    CmpRel rel = CmpRel::Lt;
    std::variant<std::monostate, std::string, Rational> payload;
    std::vector<Expr> args;
  };
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Unambiguous s-expression rendering, used as a structural key and in
/// diagnostics. Float literals print as `#b64:p/q`.
std::string to_sexpr(const Expr& e);

struct Param {
  std::string name;
  TypeTag type;
  bool operator==(const Param&) const = default;
};

struct Program {
  std::vector<Param> params;
  Expr body;
  TypeTag output;

  bool operator==(const Program& other) const {
    return params == other.params && output == other.output && body == other.body;
  }
};

using VarEnv = std::map<std::string, TypeTag, std::less<>>;
VarEnv param_env(const Program& p);

/// A position in an expression tree: child indices from the root.
using NodePath = std::vector<std::uint32_t>;

const Expr& at_path(const Expr& root, const NodePath& path);
Expr replace_at(const Expr& root, const NodePath& path, const Expr& replacement);

/// Calls f(path, node) for every node in preorder.
template <class F>
void for_each_node(const Expr& e, F&& f) {
  NodePath path;
  auto rec = [&](auto& self, const Expr& n) -> void {
    f(static_cast<const NodePath&>(path), n);
    for (std::uint32_t i = 0; i < n.args().size(); ++i) {
      path.push_back(i);
      self(self, n.args()[i]);
      path.pop_back();
    }
  };
  rec(rec, e);
}

void free_vars(const Expr& e, std::vector<std::string>& out);

class TargetDesc;

/// Surface FPCore subset reader. Literals are rounded to the precision in
/// scope and stored exactly.
Program parse_program(std::string_view text);
Program resolve(const Program& program, const TargetDesc& target);
Expr desugar(const Expr& e, const TargetDesc& target);
TypeTag typecheck(const Expr& e, const VarEnv& env, const TargetDesc& target);
/// FPCore text for a surface or resolved program.
std::string format_fpcore(const Program& p, const TargetDesc* target = nullptr);

/// Parses a pattern or approx expression: real functions by name, `?x`
/// pattern variables, plain symbols as variables (or float operators when
/// applied), numerals as Real literals.
Expr parse_real_expr(std::string_view text);

/// Decimal or `p/q` numeral to an exact rational.
std::optional<Rational> parse_numeral(std::string_view text);

/// Round-to-nearest-even of an exact rational into a float type. Overflow
/// yields infinity. Zero results are +0.
double round_to_type(const Rational& value, TypeTag t);
bool representable(const Rational& value, TypeTag t);
Rational to_rational(double v);

}  // namespace fpsel
