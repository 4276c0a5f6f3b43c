#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace qdtl {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

/// Parses "12", "0.25" or "3/4" into an exact rational. Throws std::invalid_argument.
Rational parse_rational(const std::string& text);

/// "3", "1/2"; negative values get a leading '-'.
std::string rational_to_string(const Rational& q);

double to_double(const Rational& q);

}  // namespace qdtl
