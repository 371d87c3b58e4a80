#include "homnet/sexp.hpp"

#include "homnet/relational.hpp"

#include <cctype>

namespace homnet {

const std::string& Sexp::head() const {
  static const std::string empty;
  if (is_atom || list.empty() || !list[0].is_atom) return empty;
  return list[0].atom;
}

namespace {

struct Reader {
  std::string_view text;
  std::size_t pos = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error("s-expression parse error at line " + std::to_string(line) + ": " + msg);
  }

  void skip() {
    while (pos < text.size()) {
      char c = text[pos];
      if (c == ';') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (c == '\n') ++line;
        ++pos;
      } else {
        break;
      }
    }
  }

  Sexp read() {
    skip();
    if (pos >= text.size()) fail("unexpected end of input");
    char c = text[pos];
    if (c == '(') {
      ++pos;
      std::vector<Sexp> items;
      for (;;) {
        skip();
        if (pos >= text.size()) fail("unbalanced parenthesis");
        if (text[pos] == ')') {
          ++pos;
          return Sexp::make_list(std::move(items));
        }
        items.push_back(read());
      }
    }
    if (c == ')') fail("unexpected ')'");
    std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) && text[pos] != '(' &&
           text[pos] != ')' && text[pos] != ';')
      ++pos;
    return Sexp::make_atom(std::string(text.substr(start, pos - start)));
  }
};

}  // namespace

Sexp parse_sexp(std::string_view text) {
  Reader r{text};
  Sexp s = r.read();
  r.skip();
  if (r.pos != text.size()) r.fail("trailing input after expression");
  return s;
}

std::string to_string(const Sexp& s) {
  if (s.is_atom) return s.atom;
  std::string out = "(";
  for (std::size_t i = 0; i < s.list.size(); ++i) {
    if (i) out += ' ';
    out += to_string(s.list[i]);
  }
  return out + ")";
}

}  // namespace homnet
