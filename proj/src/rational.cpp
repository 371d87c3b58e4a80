#include "homnet/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace homnet {

std::string to_string(const Rational& r) {
  return boost::multiprecision::numerator(r).str() + "/" +
         boost::multiprecision::denominator(r).str();
}

Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value has no rational form");
  return Rational(x);
}

namespace {

BigInt parse_int(std::string_view s) {
  if (s.empty()) throw std::invalid_argument("empty integer literal");
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) throw std::invalid_argument("bad integer literal");
  for (std::size_t j = i; j < s.size(); ++j)
    if (s[j] < '0' || s[j] > '9') throw std::invalid_argument("bad integer literal: " + std::string(s));
  return BigInt(std::string(s[0] == '+' ? s.substr(1) : s));
}

Rational pow10(long e) {
  BigInt p = 1;
  for (long i = 0; i < (e < 0 ? -e : e); ++i) p *= 10;
  return e < 0 ? Rational(BigInt(1)) / Rational(p) : Rational(p);
}

}  // namespace

Rational parse_rational(std::string_view text) {
  auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    BigInt den = parse_int(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Rational(parse_int(text.substr(0, slash))) / Rational(den);
  }
  auto e = text.find_first_of("eE");
  std::string_view mant = text.substr(0, e);
  long exponent = 0;
  if (e != std::string_view::npos) exponent = std::stol(std::string(text.substr(e + 1)));
  auto dot = mant.find('.');
  if (dot != std::string_view::npos) {
    std::string digits = std::string(mant.substr(0, dot)) + std::string(mant.substr(dot + 1));
    exponent -= static_cast<long>(mant.size() - dot - 1);
    if (digits.empty() || digits == "-" || digits == "+") throw std::invalid_argument("bad decimal literal");
    return Rational(parse_int(digits)) * pow10(exponent);
  }
  return Rational(parse_int(mant)) * pow10(exponent);
}

}  // namespace homnet
