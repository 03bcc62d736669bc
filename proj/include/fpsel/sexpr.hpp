#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fpsel {

/// Minimal s-expression reader shared by FPCore, target and rule files.
/// `[` `]` are accepted as list delimiters; `;` starts a line comment.
struct SExpr {
  enum class Kind { Atom, String, List };
  Kind kind = Kind::Atom;
  std::string text;
  std::vector<SExpr> items;
  int line = 1;
  int col = 1;

  bool is_atom() const { return kind == Kind::Atom; }
  bool is_list() const { return kind == Kind::List; }
  bool is_atom(std::string_view s) const { return kind == Kind::Atom && text == s; }
};

std::vector<SExpr> read_sexprs(std::string_view text);
SExpr read_one_sexpr(std::string_view text);

[[noreturn]] void fail_at(const SExpr& at, const std::string& msg);

}  // namespace fpsel
