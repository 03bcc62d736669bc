#include <mpfr.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "fpsel/oracle.hpp"
#include "fpsel/rng.hpp"

namespace fpsel {

namespace {

// ---------------------------------------------------------------------------
// Outward-rounded interval arithmetic over MPFR.

class Big {
 public:
  explicit Big(mpfr_prec_t p) { mpfr_init2(v_, p); }
  ~Big() {
    if (v_->_mpfr_d) mpfr_clear(v_);
  }
  Big(Big&& o) noexcept {
    std::memcpy(v_, o.v_, sizeof v_);
    o.v_->_mpfr_d = nullptr;
  }
  Big(const Big&) = delete;
  Big& operator=(const Big&) = delete;
  Big& operator=(Big&&) = delete;

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

 private:
  mpfr_t v_;
};

enum class St { Ok, Domain, Unknown };
enum class Tri { False, True, Unknown };

struct Val {
  St st = St::Ok;
  bool is_bool = false;
  Tri truth = Tri::Unknown;
  Big lo, hi;
  explicit Val(mpfr_prec_t p) : lo(p), hi(p) {}

  bool point() const { return mpfr_equal_p(lo.get(), hi.get()) != 0; }
};

double round_mpfr(mpfr_srcptr v, TypeTag t) {
  double d = t == TypeTag::B32 ? static_cast<double>(mpfr_get_flt(v, MPFR_RNDN)) : mpfr_get_d(v, MPFR_RNDN);
  return d == 0.0 ? 0.0 : d;
}

struct NodeRecord {
  St st = St::Unknown;
  double rlo = 0.0;
  double rhi = 0.0;
  bool seen = false;
};

using Bindings = std::vector<std::pair<const std::string*, const Val*>>;

class IntervalEval {
 public:
  IntervalEval(mpfr_prec_t prec, const TargetDesc* target, const SamplePoint* pt)
      : prec_(prec), target_(target), pt_(pt) {}

  void record_into(const std::vector<TypeTag>* types, std::vector<NodeRecord>* out) {
    types_ = types;
    records_ = out;
  }

  Val eval(const Expr& e) {
    counter_ = 0;
    return top(e);
  }

  Val eval_with(const Expr& body, const std::vector<std::string>& formals, const std::vector<const Val*>& args) {
    Bindings b;
    for (std::size_t i = 0; i < formals.size(); ++i) b.emplace_back(&formals[i], args[i]);
    return inner(body, b);
  }

  Val from_double(double v) {
    Val r(prec_);
    mpfr_set_d(r.lo.get(), v, MPFR_RNDN);
    mpfr_set_d(r.hi.get(), v, MPFR_RNDN);
    return r;
  }

 private:
  Val top(const Expr& e) {
    std::size_t idx = counter_++;
    Val v = top_node(e);
    if (records_) {
      NodeRecord& r = (*records_)[idx];
      r.seen = true;
      r.st = v.st;
      TypeTag t = (*types_)[idx];
      if (v.st == St::Ok && is_float(t) && !v.is_bool) {
        r.rlo = round_mpfr(v.lo.get(), t);
        r.rhi = round_mpfr(v.hi.get(), t);
      }
    }
    return v;
  }

  Val top_node(const Expr& e) {
    switch (e.kind()) {
      case ExprKind::Var: {
        auto it = pt_->find(e.name());
        if (it == pt_->end()) throw Error("no value for variable `" + e.name() + "`");
        return from_double(it->second);
      }
      case ExprKind::Lit: return lit(e.value());
      case ExprKind::If: {
        Val c = top(e.arg(0));
        if (records_) {
          Val t = top(e.arg(1));
          Val f = top(e.arg(2));
          if (c.st != St::Ok) return status(c.st);
          if (c.truth == Tri::Unknown) return status(St::Unknown);
          return c.truth == Tri::True ? std::move(t) : std::move(f);
        }
        if (c.st != St::Ok) return status(c.st);
        if (c.truth == Tri::Unknown) return status(St::Unknown);
        return top(c.truth == Tri::True ? e.arg(1) : e.arg(2));
      }
      case ExprKind::PatVar: throw TypeError("pattern variable in evaluated expression");
      default: break;
    }
    std::vector<Val> args;
    args.reserve(e.args().size());
    for (const auto& a : e.args()) args.push_back(top(a));
    return combine(e, args);
  }

  Val inner(const Expr& e, const Bindings& b) {
    switch (e.kind()) {
      case ExprKind::Var: {
        for (const auto& [name, val] : b)
          if (*name == e.name()) return copy(*val);
        throw Error("unbound formal `" + e.name() + "`");
      }
      case ExprKind::Lit: return lit(e.value());
      case ExprKind::If: {
        Val c = inner(e.arg(0), b);
        if (c.st != St::Ok) return status(c.st);
        if (c.truth == Tri::Unknown) return status(St::Unknown);
        return inner(c.truth == Tri::True ? e.arg(1) : e.arg(2), b);
      }
      case ExprKind::PatVar: throw TypeError("pattern variable in evaluated expression");
      default: break;
    }
    std::vector<Val> args;
    args.reserve(e.args().size());
    for (const auto& a : e.args()) args.push_back(inner(a, b));
    return combine(e, args);
  }

  Val combine(const Expr& e, std::vector<Val>& args) {
    for (const auto& a : args)
      if (a.st == St::Domain) return status(St::Domain);
    for (const auto& a : args)
      if (a.st == St::Unknown) return status(St::Unknown);
    switch (e.kind()) {
      case ExprKind::RealOp: return apply(e.fn(), args);
      case ExprKind::Cmp: return compare(e.rel(), args[0], args[1]);
      case ExprKind::FloatOp: {
        if (!target_) throw TypeError("operator `" + e.name() + "` needs a target to evaluate");
        const OperatorDef& op = target_->at(e.name());
        std::vector<const Val*> ptrs;
        for (const auto& a : args) ptrs.push_back(&a);
        return eval_with(op.approx, op.formals, ptrs);
      }
      default: throw TypeError("unexpected node in evaluation");
    }
  }

  Val status(St s) {
    Val v(prec_);
    v.st = s;
    return v;
  }

  Val copy(const Val& src) {
    Val v(prec_);
    v.st = src.st;
    v.is_bool = src.is_bool;
    v.truth = src.truth;
    mpfr_set(v.lo.get(), src.lo.get(), MPFR_RNDD);
    mpfr_set(v.hi.get(), src.hi.get(), MPFR_RNDU);
    return v;
  }

  Val lit(const Rational& q) {
    Val v(prec_);
    mpfr_set_q(v.lo.get(), q.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(v.hi.get(), q.get_mpq_t(), MPFR_RNDU);
    return v;
  }

  Val boolean(Tri t) {
    Val v(prec_);
    v.is_bool = true;
    v.truth = t;
    return v;
  }

  Val compare(CmpRel rel, const Val& a, const Val& b) {
    auto lt = [&]() -> Tri {
      if (mpfr_less_p(a.hi.get(), b.lo.get())) return Tri::True;
      if (mpfr_greaterequal_p(a.lo.get(), b.hi.get())) return Tri::False;
      return Tri::Unknown;
    };
    auto le = [&]() -> Tri {
      if (mpfr_lessequal_p(a.hi.get(), b.lo.get())) return Tri::True;
      if (mpfr_greater_p(a.lo.get(), b.hi.get())) return Tri::False;
      return Tri::Unknown;
    };
    auto eq = [&]() -> Tri {
      if (a.point() && b.point() && mpfr_equal_p(a.lo.get(), b.lo.get())) return Tri::True;
      if (mpfr_less_p(a.hi.get(), b.lo.get()) || mpfr_less_p(b.hi.get(), a.lo.get())) return Tri::False;
      return Tri::Unknown;
    };
    auto negate = [](Tri t) { return t == Tri::Unknown ? t : (t == Tri::True ? Tri::False : Tri::True); };
    switch (rel) {
      case CmpRel::Lt: return boolean(lt());
      case CmpRel::Le: return boolean(le());
      case CmpRel::Gt: return boolean(negate(le()));
      case CmpRel::Ge: return boolean(negate(lt()));
      case CmpRel::Eq: return boolean(eq());
      case CmpRel::Ne: return boolean(negate(eq()));
    }
    return boolean(Tri::Unknown);
  }

  using Unary = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_rnd_t);

  Val increasing(Unary f, const Val& a) {
    Val r(prec_);
    f(r.lo.get(), a.lo.get(), MPFR_RNDD);
    f(r.hi.get(), a.hi.get(), MPFR_RNDU);
    return r;
  }

  // Sets r to the hull of f at the given argument pairs.
  template <class F>
  void hull(Val& r, F&& f, int count) {
    Big t(prec_);
    for (int i = 0; i < count; ++i) {
      f(t.get(), i, MPFR_RNDD);
      if (i == 0 || mpfr_less_p(t.get(), r.lo.get())) mpfr_set(r.lo.get(), t.get(), MPFR_RNDD);
      f(t.get(), i, MPFR_RNDU);
      if (i == 0 || mpfr_greater_p(t.get(), r.hi.get())) mpfr_set(r.hi.get(), t.get(), MPFR_RNDU);
    }
  }

  Val apply(RealFn fn, std::vector<Val>& args) {
    Val r = apply_raw(fn, args);
    if (r.st == St::Ok && (mpfr_nan_p(r.lo.get()) || mpfr_nan_p(r.hi.get()))) return status(St::Unknown);
    return r;
  }

  Val apply_raw(RealFn fn, std::vector<Val>& args) {
    Val& a = args[0];
    switch (fn) {
      case RealFn::Add: {
        Val r(prec_);
        mpfr_add(r.lo.get(), a.lo.get(), args[1].lo.get(), MPFR_RNDD);
        mpfr_add(r.hi.get(), a.hi.get(), args[1].hi.get(), MPFR_RNDU);
        return r;
      }
      case RealFn::Sub: {
        Val r(prec_);
        mpfr_sub(r.lo.get(), a.lo.get(), args[1].hi.get(), MPFR_RNDD);
        mpfr_sub(r.hi.get(), a.hi.get(), args[1].lo.get(), MPFR_RNDU);
        return r;
      }
      case RealFn::Mul: return mul(a, args[1]);
      case RealFn::Div: {
        const Val& b = args[1];
        if (mpfr_zero_p(b.lo.get()) && mpfr_zero_p(b.hi.get())) return status(St::Domain);
        if (mpfr_sgn(b.lo.get()) <= 0 && mpfr_sgn(b.hi.get()) >= 0) return status(St::Unknown);
        Val r(prec_);
        hull(r, [&](mpfr_ptr t, int i, mpfr_rnd_t rnd) {
          mpfr_div(t, (i & 1 ? a.hi : a.lo).get(), (i & 2 ? b.hi : b.lo).get(), rnd);
        }, 4);
        return r;
      }
      case RealFn::Neg: {
        Val r(prec_);
        mpfr_neg(r.lo.get(), a.hi.get(), MPFR_RNDD);
        mpfr_neg(r.hi.get(), a.lo.get(), MPFR_RNDU);
        return r;
      }
      case RealFn::Sqrt:
        if (mpfr_sgn(a.hi.get()) < 0) return status(St::Domain);
        if (mpfr_sgn(a.lo.get()) < 0) return status(St::Unknown);
        return increasing(mpfr_sqrt, a);
      case RealFn::Fabs: return fabs_of(a);
      case RealFn::Exp: return increasing(mpfr_exp, a);
      case RealFn::Expm1: return increasing(mpfr_expm1, a);
      case RealFn::Log:
        if (mpfr_sgn(a.hi.get()) <= 0) return status(St::Domain);
        if (mpfr_sgn(a.lo.get()) <= 0) return status(St::Unknown);
        return increasing(mpfr_log, a);
      case RealFn::Log1p:
        if (mpfr_cmp_si(a.hi.get(), -1) <= 0) return status(St::Domain);
        if (mpfr_cmp_si(a.lo.get(), -1) <= 0) return status(St::Unknown);
        return increasing(mpfr_log1p, a);
      case RealFn::Pow: return pow(a, args[1]);
      case RealFn::Sin: return sin_cos(a, true);
      case RealFn::Cos: return sin_cos(a, false);
      case RealFn::Tan: return tan(a);
      case RealFn::Fma: {
        if (a.point() && args[1].point() && args[2].point()) {
          Val r(prec_);
          mpfr_fma(r.lo.get(), a.lo.get(), args[1].lo.get(), args[2].lo.get(), MPFR_RNDD);
          mpfr_fma(r.hi.get(), a.lo.get(), args[1].lo.get(), args[2].lo.get(), MPFR_RNDU);
          return r;
        }
        Val p = mul(a, args[1]);
        Val r(prec_);
        mpfr_add(r.lo.get(), p.lo.get(), args[2].lo.get(), MPFR_RNDD);
        mpfr_add(r.hi.get(), p.hi.get(), args[2].hi.get(), MPFR_RNDU);
        return r;
      }
      case RealFn::Hypot: {
        Val x = fabs_of(a);
        Val y = fabs_of(args[1]);
        Val r(prec_);
        mpfr_hypot(r.lo.get(), x.lo.get(), y.lo.get(), MPFR_RNDD);
        mpfr_hypot(r.hi.get(), x.hi.get(), y.hi.get(), MPFR_RNDU);
        return r;
      }
    }
    return status(St::Unknown);
  }

  Val mul(const Val& a, const Val& b) {
    Val r(prec_);
    hull(r, [&](mpfr_ptr t, int i, mpfr_rnd_t rnd) {
      mpfr_mul(t, (i & 1 ? a.hi : a.lo).get(), (i & 2 ? b.hi : b.lo).get(), rnd);
    }, 4);
    return r;
  }

  Val fabs_of(const Val& a) {
    Val r(prec_);
    if (mpfr_sgn(a.lo.get()) >= 0) {
      mpfr_set(r.lo.get(), a.lo.get(), MPFR_RNDD);
      mpfr_set(r.hi.get(), a.hi.get(), MPFR_RNDU);
    } else if (mpfr_sgn(a.hi.get()) <= 0) {
      mpfr_neg(r.lo.get(), a.hi.get(), MPFR_RNDD);
      mpfr_neg(r.hi.get(), a.lo.get(), MPFR_RNDU);
    } else {
      mpfr_set_zero(r.lo.get(), 1);
      if (mpfr_cmpabs(a.lo.get(), a.hi.get()) > 0)
        mpfr_neg(r.hi.get(), a.lo.get(), MPFR_RNDU);
      else
        mpfr_set(r.hi.get(), a.hi.get(), MPFR_RNDU);
    }
    return r;
  }

  Val pow(const Val& a, const Val& b) {
    Val r(prec_);
    auto corners = [&](int na, int nb) {
      hull(r, [&](mpfr_ptr t, int i, mpfr_rnd_t rnd) {
        const Big& x = (na == 2 && (i & 1)) ? a.hi : a.lo;
        const Big& y = (nb == 2 && (i & 2)) ? b.hi : b.lo;
        mpfr_pow(t, x.get(), y.get(), rnd);
      }, 4);
    };
    bool a_zero = mpfr_zero_p(a.lo.get()) && mpfr_zero_p(a.hi.get());
    if (b.point() && mpfr_integer_p(b.lo.get())) {
      if (mpfr_zero_p(b.lo.get())) {
        mpfr_set_ui(r.lo.get(), 1, MPFR_RNDD);
        mpfr_set_ui(r.hi.get(), 1, MPFR_RNDU);
        return r;
      }
      bool negative_exp = mpfr_sgn(b.lo.get()) < 0;
      if (a_zero) {
        if (negative_exp) return status(St::Domain);
        mpfr_set_zero(r.lo.get(), 1);
        mpfr_set_zero(r.hi.get(), 1);
        return r;
      }
      bool straddles = mpfr_sgn(a.lo.get()) < 0 && mpfr_sgn(a.hi.get()) > 0;
      bool touches = mpfr_zero_p(a.lo.get()) || mpfr_zero_p(a.hi.get());
      if (negative_exp && (straddles || touches)) return status(St::Unknown);
      Big half(mpfr_get_prec(b.lo.get()) + 1);
      mpfr_div_2ui(half.get(), b.lo.get(), 1, MPFR_RNDN);
      bool even = mpfr_integer_p(half.get()) != 0;
      corners(2, 1);
      if (!negative_exp && even && straddles) mpfr_set_zero(r.lo.get(), 1);
      return r;
    }
    if (a_zero) {
      if (mpfr_sgn(b.lo.get()) > 0) {
        mpfr_set_zero(r.lo.get(), 1);
        mpfr_set_zero(r.hi.get(), 1);
        return r;
      }
      if (mpfr_sgn(b.hi.get()) < 0) return status(St::Domain);
      return status(St::Unknown);
    }
    if (mpfr_sgn(a.hi.get()) < 0) return status(b.point() ? St::Domain : St::Unknown);
    if (mpfr_sgn(a.lo.get()) <= 0) return status(St::Unknown);
    corners(2, 2);
    return r;
  }

  // Width strictly below pi guarantees at most one critical point inside.
  bool narrow(const Val& a) {
    Big w(prec_);
    mpfr_sub(w.get(), a.hi.get(), a.lo.get(), MPFR_RNDU);
    return mpfr_cmp_ui(w.get(), 3) <= 0;
  }

  int sign_of(Unary f, const Big& x) {
    Big t(prec_);
    f(t.get(), x.get(), MPFR_RNDN);
    return mpfr_sgn(t.get());
  }

  Val sin_cos(const Val& a, bool is_sin) {
    Unary f = is_sin ? mpfr_sin : mpfr_cos;
    Val r(prec_);
    if (a.point()) {
      f(r.lo.get(), a.lo.get(), MPFR_RNDD);
      f(r.hi.get(), a.lo.get(), MPFR_RNDU);
      return r;
    }
    if (!narrow(a)) {
      mpfr_set_si(r.lo.get(), -1, MPFR_RNDD);
      mpfr_set_si(r.hi.get(), 1, MPFR_RNDU);
      return r;
    }
    hull(r, [&](mpfr_ptr t, int i, mpfr_rnd_t rnd) { f(t, (i ? a.hi : a.lo).get(), rnd); }, 2);
    // Sign of the derivative at each end: cos for sin, -sin for cos.
    int dl = is_sin ? sign_of(mpfr_cos, a.lo) : -sign_of(mpfr_sin, a.lo);
    int dh = is_sin ? sign_of(mpfr_cos, a.hi) : -sign_of(mpfr_sin, a.hi);
    if (dl > 0 && dh < 0) mpfr_set_si(r.hi.get(), 1, MPFR_RNDU);
    if (dl < 0 && dh > 0) mpfr_set_si(r.lo.get(), -1, MPFR_RNDD);
    return r;
  }

  Val tan(const Val& a) {
    Val r(prec_);
    if (a.point()) {
      mpfr_tan(r.lo.get(), a.lo.get(), MPFR_RNDD);
      mpfr_tan(r.hi.get(), a.lo.get(), MPFR_RNDU);
      return r;
    }
    if (!narrow(a) || sign_of(mpfr_cos, a.lo) != sign_of(mpfr_cos, a.hi)) return status(St::Unknown);
    return increasing(mpfr_tan, a);
  }

  mpfr_prec_t prec_;
  const TargetDesc* target_;
  const SamplePoint* pt_;
  const std::vector<TypeTag>* types_ = nullptr;
  std::vector<NodeRecord>* records_ = nullptr;
  std::size_t counter_ = 0;
};

// Rounding applied to an operator's exact result.
double round_impl(mpfr_srcptr v, const OperatorDef& op) {
  if (op.impl.kind == OperatorImpl::Kind::CorrectlyRounded) return round_mpfr(v, op.ret_type);
  Big q(op.impl.bits);
  mpfr_set(q.get(), v, MPFR_RNDN);
  return round_mpfr(q.get(), op.ret_type);
}

enum class FastKind { None, Add, Sub, Mul, Div, Neg, Sqrt, Fabs, Fma };

// Correctly rounded single basic operations map onto hardware arithmetic.
FastKind fast_kind(const OperatorDef& op) {
  if (op.impl.kind != OperatorImpl::Kind::CorrectlyRounded) return FastKind::None;
  for (TypeTag t : op.arg_types)
    if (t != op.ret_type) return FastKind::None;
  const Expr& a = op.approx;
  if (!a.is(ExprKind::RealOp) || a.args().size() != op.formals.size()) return FastKind::None;
  for (std::size_t i = 0; i < a.args().size(); ++i)
    if (!a.arg(i).is(ExprKind::Var) || a.arg(i).name() != op.formals[i]) return FastKind::None;
  switch (a.fn()) {
    case RealFn::Add: return FastKind::Add;
    case RealFn::Sub: return FastKind::Sub;
    case RealFn::Mul: return FastKind::Mul;
    case RealFn::Div: return FastKind::Div;
    case RealFn::Neg: return FastKind::Neg;
    case RealFn::Sqrt: return FastKind::Sqrt;
    case RealFn::Fabs: return FastKind::Fabs;
    case RealFn::Fma: return FastKind::Fma;
    default: return FastKind::None;
  }
}

template <class T>
T fast_apply(FastKind k, const std::vector<double>& d) {
  auto x = [&](std::size_t i) { return static_cast<T>(d[i]); };
  switch (k) {
    case FastKind::Add: return x(0) + x(1);
    case FastKind::Sub: return x(0) - x(1);
    case FastKind::Mul: return x(0) * x(1);
    case FastKind::Div: return x(0) / x(1);
    case FastKind::Neg: return -x(0);
    case FastKind::Sqrt: return std::sqrt(x(0));
    case FastKind::Fabs: return std::fabs(x(0));
    case FastKind::Fma: return std::fma(x(0), x(1), x(2));
    case FastKind::None: break;
  }
  return std::numeric_limits<T>::quiet_NaN();
}

bool eval_bool(const Expr& e, const SamplePoint& pt, const TargetDesc& target);

double eval_float_rec(const Expr& e, const SamplePoint& pt, const TargetDesc& target) {
  switch (e.kind()) {
    case ExprKind::Var: {
      auto it = pt.find(e.name());
      if (it == pt.end()) throw Error("no value for variable `" + e.name() + "`");
      return it->second;
    }
    case ExprKind::Lit: return e.value().get_d();
    case ExprKind::FloatOp: {
      std::vector<double> args;
      args.reserve(e.args().size());
      for (const auto& a : e.args()) {
        double v = eval_float_rec(a, pt, target);
        if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
        args.push_back(v);
      }
      return apply_operator(target.at(e.name()), args);
    }
    case ExprKind::If:
      return eval_bool(e.arg(0), pt, target) ? eval_float_rec(e.arg(1), pt, target)
                                             : eval_float_rec(e.arg(2), pt, target);
    default: throw TypeError("cannot evaluate `" + to_sexpr(e) + "` as a float program");
  }
}

bool eval_bool(const Expr& e, const SamplePoint& pt, const TargetDesc& target) {
  if (!e.is(ExprKind::Cmp)) throw TypeError("condition is not a comparison");
  double a = eval_float_rec(e.arg(0), pt, target);
  double b = eval_float_rec(e.arg(1), pt, target);
  switch (e.rel()) {
    case CmpRel::Lt: return a < b;
    case CmpRel::Le: return a <= b;
    case CmpRel::Eq: return a == b;
    case CmpRel::Ne: return a != b;
    case CmpRel::Ge: return a >= b;
    case CmpRel::Gt: return a > b;
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------

std::optional<double> eval_real(const Expr& e, const SamplePoint& pt, TypeTag out, const TargetDesc* target) {
  for (int prec : kPrecisionLadder) {
    IntervalEval ev(prec, target, &pt);
    Val v = ev.eval(e);
    if (v.st == St::Domain) return std::nullopt;
    if (v.st != St::Ok || v.is_bool) continue;
    double lo = round_mpfr(v.lo.get(), out);
    double hi = round_mpfr(v.hi.get(), out);
    if (lo == hi) {
      if (!std::isfinite(lo)) return std::nullopt;
      return lo;
    }
  }
  return std::nullopt;
}

std::vector<std::optional<double>> eval_nodes(const Expr& e, const SamplePoint& pt,
                                              const std::vector<TypeTag>& types, const TargetDesc* target) {
  std::size_t n = e.size();
  if (types.size() != n) throw Error("node type list does not match expression size");
  std::vector<std::optional<double>> out(n);
  std::vector<bool> decided(n, false);
  std::size_t open = 0;
  for (std::size_t i = 0; i < n; ++i) {
    decided[i] = !is_float(types[i]);
    if (!decided[i]) ++open;
  }
  for (int prec : kPrecisionLadder) {
    if (open == 0) break;
    std::vector<NodeRecord> rec(n);
    IntervalEval ev(prec, target, &pt);
    ev.record_into(&types, &rec);
    ev.eval(e);
    for (std::size_t i = 0; i < n; ++i) {
      if (decided[i] || !rec[i].seen) continue;
      if (rec[i].st == St::Domain) {
        decided[i] = true;
        --open;
      } else if (rec[i].st == St::Ok && rec[i].rlo == rec[i].rhi) {
        decided[i] = true;
        --open;
        if (std::isfinite(rec[i].rlo)) out[i] = rec[i].rlo;
      }
    }
  }
  return out;
}

double apply_operator(const OperatorDef& op, const std::vector<double>& args) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (double a : args)
    if (!std::isfinite(a)) return nan;
  if (FastKind k = fast_kind(op); k != FastKind::None) {
    double r = op.ret_type == TypeTag::B32 ? static_cast<double>(fast_apply<float>(k, args)) : fast_apply<double>(k, args);
    if (!std::isfinite(r)) return nan;
    return r == 0.0 ? 0.0 : r;
  }
  SamplePoint none;
  for (int prec : kPrecisionLadder) {
    IntervalEval ev(prec, nullptr, &none);
    std::vector<Val> vals;
    vals.reserve(args.size());
    for (double a : args) vals.push_back(ev.from_double(a));
    std::vector<const Val*> ptrs;
    for (const auto& v : vals) ptrs.push_back(&v);
    Val r = ev.eval_with(op.approx, op.formals, ptrs);
    if (r.st == St::Domain) return nan;
    if (r.st != St::Ok) continue;
    double lo = round_impl(r.lo.get(), op);
    double hi = round_impl(r.hi.get(), op);
    if (lo == hi) return std::isfinite(lo) ? lo : nan;
  }
  return nan;
}

double eval_float(const Expr& e, const SamplePoint& pt, const TargetDesc& target) {
  return eval_float_rec(e, pt, target);
}

// ---------------------------------------------------------------------------
// Ordinals and error

std::int64_t max_ordinal(TypeTag t) {
  return t == TypeTag::B32 ? 0x7F7FFFFFLL : 0x7FEFFFFFFFFFFFFFLL;
}

std::int64_t float_ordinal(double v, TypeTag t) {
  std::int64_t mag;
  if (t == TypeTag::B32)
    mag = std::bit_cast<std::uint32_t>(std::fabs(static_cast<float>(v)));
  else
    mag = static_cast<std::int64_t>(std::bit_cast<std::uint64_t>(std::fabs(v)));
  return std::signbit(v) ? -mag : mag;
}

double ordinal_to_float(std::int64_t ord, TypeTag t) {
  std::uint64_t mag = static_cast<std::uint64_t>(ord < 0 ? -ord : ord);
  double v = t == TypeTag::B32 ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(mag)))
                               : std::bit_cast<double>(mag);
  return ord < 0 ? -v : v;
}

double bits_of_error(double got, double want, TypeTag t) {
  double p = precision(t);
  bool gn = std::isnan(got), wn = std::isnan(want);
  if (gn && wn) return 0.0;
  if (gn || wn) return p;
  std::int64_t a = float_ordinal(got, t), b = float_ordinal(want, t);
  std::uint64_t d = a > b ? static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b)
                          : static_cast<std::uint64_t>(b) - static_cast<std::uint64_t>(a);
  double bits = std::log2(1.0 + static_cast<double>(d));
  return std::clamp(bits, 0.0, p);
}

// ---------------------------------------------------------------------------
// Sampling

SampleSet sample_with_truth(const Program& p, const TargetDesc& target, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error("sample size must be positive");
  constexpr std::size_t kDrawWindow = 1'000'000;
  SplitMix64 rng(seed);
  SampleSet out;
  while (out.points.size() < n) {
    SamplePoint pt;
    for (const auto& param : p.params) {
      auto m = static_cast<std::uint64_t>(max_ordinal(param.type));
      // 2m+1 overflows int64 for binary64, so the draw stays unsigned.
      auto ord = static_cast<std::int64_t>(rng.below(2 * m + 1) - m);
      pt[param.name] = ordinal_to_float(ord, param.type);
    }
    ++out.draws;
    if (auto v = eval_real(p.body, pt, p.output, &target)) {
      out.points.push_back(std::move(pt));
      out.truth.push_back(*v);
    }
    if (out.draws >= kDrawWindow && out.points.size() * 1000 < out.draws)
      throw SamplingExhausted("fewer than 0.1% of " + std::to_string(out.draws) +
                              " sampled inputs have a representable result");
  }
  return out;
}

std::vector<SamplePoint> sample(const Program& p, const TargetDesc& target, std::size_t n, std::uint64_t seed) {
  return sample_with_truth(p, target, n, seed).points;
}

std::vector<double> ground_truth(const Program& p, const std::vector<SamplePoint>& points, const TargetDesc& target) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& pt : points)
    out.push_back(eval_real(p.body, pt, p.output, &target).value_or(std::numeric_limits<double>::quiet_NaN()));
  return out;
}

ErrorReport accuracy(const Program& p, const std::vector<SamplePoint>& points, const std::vector<double>& truth,
                     const TargetDesc& target) {
  ErrorReport r;
  r.bits.reserve(points.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double b = bits_of_error(eval_float(p.body, points[i], target), truth[i], p.output);
    r.bits.push_back(b);
    sum += b;
  }
  r.mean_bits = points.empty() ? 0.0 : sum / static_cast<double>(points.size());
  r.accuracy = precision(p.output) - r.mean_bits;
  return r;
}

ErrorReport accuracy(const Program& p, const std::vector<SamplePoint>& points, const TargetDesc& target) {
  return accuracy(p, points, ground_truth(p, points, target), target);
}

std::vector<TypeTag> node_types(const Expr& e, const VarEnv& env, const TargetDesc& target) {
  std::vector<TypeTag> out;
  for_each_node(e, [&](const NodePath&, const Expr& n) { out.push_back(typecheck(n, env, target)); });
  return out;
}

std::map<NodePath, double> local_error(const Program& p, const std::vector<SamplePoint>& points,
                                       const TargetDesc& target) {
  std::vector<TypeTag> types = node_types(p.body, param_env(p), target);
  std::vector<NodePath> paths;
  std::vector<const Expr*> nodes;
  std::vector<std::vector<std::size_t>> kids;
  for_each_node(p.body, [&](const NodePath& path, const Expr& n) {
    paths.push_back(path);
    nodes.push_back(&n);
  });
  kids.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::size_t child = i + 1;
    for (const auto& a : nodes[i]->args()) {
      kids[i].push_back(child);
      child += a.size();
    }
  }
  std::vector<double> sums(nodes.size(), 0.0);
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& pt : points) {
    auto vals = eval_nodes(p.body, pt, types, &target);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i]->is(ExprKind::FloatOp)) continue;
      const OperatorDef& op = target.at(nodes[i]->name());
      std::vector<double> args;
      for (std::size_t k : kids[i]) args.push_back(vals[k].value_or(nan));
      sums[i] += bits_of_error(apply_operator(op, args), vals[i].value_or(nan), op.ret_type);
    }
  }
  std::map<NodePath, double> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    out[paths[i]] = points.empty() ? 0.0 : sums[i] / static_cast<double>(points.size());
  return out;
}

}  // namespace fpsel
