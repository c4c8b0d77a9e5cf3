#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "iirforge/rational.hpp"

namespace iirforge {

/// Signed fixed-point coefficient format: w bits including sign, MSB position g.
/// Represented values are i * 2^(g-w+1) for i in [-2^(w-1), 2^(w-1)-1].
struct CoefficientFormat {
  int w = 2;
  int g = 0;

  int lsb() const { return g - w + 1; }
  Rat scale() const { return pow2(lsb()); }
};

/// Integer range representable by a format: [-2^(w-1), 2^(w-1)-1].
std::pair<std::int64_t, std::int64_t> integer_range(const CoefficientFormat& fmt);

/// Smallest g with 2^g >= max_abs. Throws on max_abs <= 0.
int msb_for_bound(double max_abs);

/// Second-order filter with quantized coefficients. a0 is implicitly 1.
struct QuantizedFilter {
  std::int64_t a1 = 0, a2 = 0;
  std::int64_t b0 = 0, b1 = 0, b2 = 0;
  CoefficientFormat fmt_a;
  CoefficientFormat fmt_b;

  struct RealCoefficients {
    Rat a1, a2, b0, b1, b2;
  };
  /// Exact dyadic real coefficients.
  RealCoefficients to_real() const;

  bool valid() const;
};

}  // namespace iirforge
