#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>

namespace iirforge {

using Int = mpz_class;
using Rat = mpq_class;

/// Exact conversion of a finite double (doubles are dyadic rationals).
Rat rat_from_double(double x);

/// Parse a decimal literal ("-1.0625", "3e-2") into the exact rational it denotes.
/// Throws std::invalid_argument on malformed input. Locale-independent.
Rat rat_from_decimal(const std::string& text);

/// Exact power of two, any sign of the exponent.
Rat pow2(int e);

Int floor_div(const Int& num, const Int& den);  // floor(num/den), den > 0
Int ceil_div(const Int& num, const Int& den);   // ceil(num/den), den > 0

Int rat_floor(const Rat& q);
Int rat_ceil(const Rat& q);

/// Exact decimal expansion. Returns nullopt when the denominator has a prime
/// factor other than 2 or 5 (no finite expansion exists).
std::optional<std::string> rat_to_decimal(const Rat& q);

/// Clamped conversion to __int128; values beyond +/-2^126 saturate.
__int128 rat_ceil_i128(const Rat& q);
__int128 rat_floor_i128(const Rat& q);
__int128 int_to_i128_saturating(const Int& z);
Int int_from_i128(__int128 v);

inline constexpr __int128 kI128Sat = (__int128)1 << 126;

}  // namespace iirforge
