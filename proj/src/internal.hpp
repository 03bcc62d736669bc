#pragma once

#include "fpsel/ir.hpp"
#include "fpsel/sexpr.hpp"

namespace fpsel::detail {

Expr real_expr_from_sexpr(const SExpr& s);
Expr substitute(const Expr& e, const std::vector<std::string>& formals, const std::vector<Expr>& args);

}  // namespace fpsel::detail
