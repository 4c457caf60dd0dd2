#include "dsp/rational.hpp"

#include "dsp/error.hpp"

#include <cctype>

namespace dsp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::OmegaHolds: return "OmegaHolds";
    case ErrorKind::BetaFails: return "BetaFails";
    case ErrorKind::SizeOne: return "SizeOne";
    case ErrorKind::KappaNonZero: return "KappaNonZero";
    case ErrorKind::ConstraintViolated: return "ConstraintViolated";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::SamplingExhausted: return "SamplingExhausted";
    case ErrorKind::InvalidTarget: return "InvalidTarget";
    case ErrorKind::InconsistentChains: return "InconsistentChains";
    case ErrorKind::SpectrumInvalid: return "SpectrumInvalid";
    case ErrorKind::BlockSplitImpossible: return "BlockSplitImpossible";
    case ErrorKind::CentralizerNontrivial: return "CentralizerNontrivial";
    case ErrorKind::ContinuationStuck: return "ContinuationStuck";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

namespace {

BigInt parse_integer(std::string_view text, std::string_view whole) {
  if (text.empty()) throw Error(ErrorKind::InvalidInput, "malformed rational '" + std::string(whole) + "'");
  std::size_t i = 0;
  bool negative = false;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    i = 1;
  }
  if (i == text.size()) throw Error(ErrorKind::InvalidInput, "malformed rational '" + std::string(whole) + "'");
  BigInt value = 0;
  for (; i < text.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      throw Error(ErrorKind::InvalidInput, "malformed rational '" + std::string(whole) + "'");
    }
    value = value * 10 + (text[i] - '0');
  }
  return negative ? BigInt(-value) : value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(parse_integer(text, text));
  BigInt num = parse_integer(text.substr(0, slash), text);
  BigInt den = parse_integer(text.substr(slash + 1), text);
  if (den == 0) throw Error(ErrorKind::InvalidInput, "zero denominator in '" + std::string(text) + "'");
  return Rational(num, den);
}

std::string to_string(const Rational& r) {
  BigInt num = numerator_of(r);
  BigInt den = denominator_of(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

BigInt numerator_of(const Rational& r) { return boost::multiprecision::numerator(r); }
BigInt denominator_of(const Rational& r) { return boost::multiprecision::denominator(r); }

BigInt floor_of(const Rational& r) {
  BigInt num = numerator_of(r);
  BigInt den = denominator_of(r);
  BigInt q = num / den;  // truncates toward zero
  if (num < 0 && q * den != num) q -= 1;
  return q;
}

Rational frac(const Rational& r) { return r - Rational(floor_of(r)); }

bool is_integer(const Rational& r) { return denominator_of(r) == 1; }

double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace dsp
