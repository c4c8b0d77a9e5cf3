#include "iirforge/fixedpoint.hpp"

#include <cmath>
#include <stdexcept>

namespace iirforge {

std::pair<std::int64_t, std::int64_t> integer_range(const CoefficientFormat& fmt) {
  if (fmt.w < 2 || fmt.w > 62) throw std::invalid_argument("integer_range: bad word length");
  std::int64_t half = std::int64_t{1} << (fmt.w - 1);
  return {-half, half - 1};
}

int msb_for_bound(double max_abs) {
  if (!(max_abs > 0)) throw std::invalid_argument("msb_for_bound: max_abs must be > 0");
  int g = static_cast<int>(std::ceil(std::log2(max_abs)));
  // log2 is inexact near powers of two; fix up with exact comparisons
  while (std::ldexp(1.0, g) < max_abs) ++g;
  while (g > -1074 && std::ldexp(1.0, g - 1) >= max_abs) --g;
  return g;
}

QuantizedFilter::RealCoefficients QuantizedFilter::to_real() const {
  Rat sa = fmt_a.scale(), sb = fmt_b.scale();
  return {Rat(a1) * sa, Rat(a2) * sa, Rat(b0) * sb, Rat(b1) * sb, Rat(b2) * sb};
}

bool QuantizedFilter::valid() const {
  auto [alo, ahi] = integer_range(fmt_a);
  auto [blo, bhi] = integer_range(fmt_b);
  return a1 >= alo && a1 <= ahi && a2 >= alo && a2 <= ahi && b0 >= blo && b0 <= bhi &&
         b1 >= blo && b1 <= bhi && b2 >= blo && b2 <= bhi;
}

}  // namespace iirforge
