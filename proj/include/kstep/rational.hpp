#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kstep {

/// Exact rational number. Every value the verifier sees is one of these.
using Rational = mpq_class;
using RationalVector = std::vector<Rational>;

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// num/den reduced to lowest terms. mpq_class's two-argument constructor
/// does not reduce, and comparisons on unreduced values are wrong.
inline Rational make_rational(long num, long den)
{
    Rational r(num, den);
    r.canonicalize();
    return r;
}

/// Parses "p/q", an integer, or a decimal literal ("-0.25", "1e-3") exactly.
Rational parse_rational(std::string_view text);

/// Decimal when the value has a finite decimal expansion, "p/q" otherwise.
std::string to_string(const Rational& value);

/// Lossy, for display and plotting only.
double to_double(const Rational& value);

}  // namespace kstep
