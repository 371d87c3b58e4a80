#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace homnet {

struct Sexp {
  bool is_atom = true;
  std::string atom;
  std::vector<Sexp> list;

  static Sexp make_atom(std::string s) { return Sexp{true, std::move(s), {}}; }
  static Sexp make_list(std::vector<Sexp> l) { return Sexp{false, {}, std::move(l)}; }
  bool is_list() const { return !is_atom; }
  // Head symbol of a non-empty list whose first element is an atom, else "".
  const std::string& head() const;
};

// Parses exactly one expression; ';' starts a comment running to end of line.
Sexp parse_sexp(std::string_view text);
std::string to_string(const Sexp& s);

}  // namespace homnet
