#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

namespace dsp {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Parses "p/q", "p" or "-p/q". Throws Error(InvalidInput) on malformed text
/// or a zero denominator.
Rational parse_rational(std::string_view text);

/// Lowest-terms "p/q" (or "p" when the denominator is 1).
std::string to_string(const Rational& r);

BigInt numerator_of(const Rational& r);
BigInt denominator_of(const Rational& r);

BigInt floor_of(const Rational& r);

/// Representative of r modulo 1 in [0, 1).
Rational frac(const Rational& r);

bool is_integer(const Rational& r);

double to_double(const Rational& r);

}  // namespace dsp
