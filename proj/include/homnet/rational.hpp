#pragma once

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/gmp.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <string_view>

namespace homnet {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                             boost::multiprecision::et_off>;

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using RowVector = Eigen::Matrix<S, 1, Eigen::Dynamic>;
template <typename S>
using SparseMatrix = Eigen::SparseMatrix<S, Eigen::RowMajor>;

// "p/q" with q > 0; integers print as "p/1".
std::string to_string(const Rational& r);
// Accepts "p/q", "p", and decimal literals such as "0.25" or "-1e-3".
Rational parse_rational(std::string_view text);

// Exact conversion of a finite double.
Rational rational_from_double(double x);

template <typename S>
S scalar_cast(const Rational& r);
template <>
inline Rational scalar_cast<Rational>(const Rational& r) { return r; }
template <>
inline double scalar_cast<double>(const Rational& r) { return r.convert_to<double>(); }

inline double to_double(double x) { return x; }
inline double to_double(const Rational& r) { return r.convert_to<double>(); }

template <typename S>
constexpr bool is_exact_v = std::is_same_v<S, Rational>;

}  // namespace homnet
