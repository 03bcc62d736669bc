#include "fpsel/sexpr.hpp"

#include <cctype>

#include "fpsel/error.hpp"

namespace fpsel {

namespace {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  SExpr read() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", line_, col_);
    SExpr out;
    out.line = line_;
    out.col = col_;
    char c = text_[pos_];
    if (c == '(' || c == '[') {
      char close = c == '(' ? ')' : ']';
      advance();
      out.kind = SExpr::Kind::List;
      for (;;) {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError("unclosed list", out.line, out.col);
        char d = text_[pos_];
        if (d == ')' || d == ']') {
          if (d != close) throw ParseError("mismatched closing delimiter", line_, col_);
          advance();
          break;
        }
        out.items.push_back(read());
      }
      return out;
    }
    if (c == ')' || c == ']') throw ParseError("unexpected closing delimiter", line_, col_);
    if (c == '"') {
      advance();
      out.kind = SExpr::Kind::String;
      for (;;) {
        if (pos_ >= text_.size()) throw ParseError("unterminated string", out.line, out.col);
        char d = text_[pos_];
        advance();
        if (d == '"') break;
        if (d == '\\') {
          if (pos_ >= text_.size()) throw ParseError("unterminated string", out.line, out.col);
          char e = text_[pos_];
          advance();
          out.text.push_back(e == 'n' ? '\n' : e);
        } else {
          out.text.push_back(d);
        }
      }
      return out;
    }
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == '[' || d == ']' ||
          d == ';' || d == '"')
        break;
      out.text.push_back(d);
      advance();
    }
    return out;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

std::vector<SExpr> read_sexprs(std::string_view text) {
  Reader r(text);
  std::vector<SExpr> out;
  while (!r.at_end()) out.push_back(r.read());
  return out;
}

SExpr read_one_sexpr(std::string_view text) {
  Reader r(text);
  SExpr e = r.read();
  if (!r.at_end()) throw ParseError("trailing input after expression", 1, 1);
  return e;
}

void fail_at(const SExpr& at, const std::string& msg) { throw ParseError(msg, at.line, at.col); }

}  // namespace fpsel
