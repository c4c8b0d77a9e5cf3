#include "iirforge/rational.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace iirforge {

Rat rat_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("rat_from_double: non-finite value");
  Rat q;
  mpq_set_d(q.get_mpq_t(), x);
  return q;
}

Rat rat_from_decimal(const std::string& text) {
  const char* s = text.c_str();
  const char* p = s;
  bool neg = false;
  if (*p == '+' || *p == '-') neg = (*p++ == '-');
  std::string digits;
  long frac_digits = 0;
  bool any = false, dot = false;
  for (; *p; ++p) {
    if (std::isdigit(static_cast<unsigned char>(*p))) {
      digits += *p;
      if (dot) ++frac_digits;
      any = true;
    } else if (*p == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (!any) throw std::invalid_argument("rat_from_decimal: '" + text + "'");
  long exp10 = 0;
  if (*p == 'e' || *p == 'E') {
    ++p;
    bool eneg = false;
    if (*p == '+' || *p == '-') eneg = (*p++ == '-');
    if (!std::isdigit(static_cast<unsigned char>(*p)))
      throw std::invalid_argument("rat_from_decimal: '" + text + "'");
    for (; std::isdigit(static_cast<unsigned char>(*p)); ++p) exp10 = exp10 * 10 + (*p - '0');
    if (eneg) exp10 = -exp10;
  }
  if (*p != '\0') throw std::invalid_argument("rat_from_decimal: '" + text + "'");

  Int num;
  if (mpz_set_str(num.get_mpz_t(), digits.empty() ? "0" : digits.c_str(), 10) != 0)
    throw std::invalid_argument("rat_from_decimal: '" + text + "'");
  if (neg) num = -num;
  long e = exp10 - frac_digits;
  Int ten10 = 1;
  mpz_ui_pow_ui(ten10.get_mpz_t(), 10, static_cast<unsigned long>(e < 0 ? -e : e));
  Rat q;
  if (e >= 0)
    q = Rat(num * ten10);
  else
    q = Rat(num, ten10);
  q.canonicalize();
  return q;
}

Rat pow2(int e) {
  Int z = 1;
  mpz_mul_2exp(z.get_mpz_t(), z.get_mpz_t(), static_cast<unsigned long>(e < 0 ? -e : e));
  return e >= 0 ? Rat(z) : Rat(1, z);
}

Int floor_div(const Int& num, const Int& den) {
  Int q;
  mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return q;
}

Int ceil_div(const Int& num, const Int& den) {
  Int q;
  mpz_cdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return q;
}

Int rat_floor(const Rat& q) { return floor_div(q.get_num(), q.get_den()); }
Int rat_ceil(const Rat& q) { return ceil_div(q.get_num(), q.get_den()); }

std::optional<std::string> rat_to_decimal(const Rat& q) {
  Int den = q.get_den();
  // strip factors of 2 and 5; anything left means no finite expansion
  unsigned long twos = mpz_scan1(den.get_mpz_t(), 0);
  mpz_tdiv_q_2exp(den.get_mpz_t(), den.get_mpz_t(), twos);
  unsigned long fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
    mpz_divexact_ui(den.get_mpz_t(), den.get_mpz_t(), 5);
    ++fives;
  }
  if (den != 1) return std::nullopt;
  // q = num / (2^twos 5^fives); scale to 10^k with k = max(twos, fives)
  unsigned long k = std::max(twos, fives);
  Int num = q.get_num();
  Int scale = 1;
  mpz_ui_pow_ui(scale.get_mpz_t(), 2, k - twos);
  num *= scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 5, k - fives);
  num *= scale;
  bool neg = num < 0;
  if (neg) num = -num;
  std::string s = num.get_str();
  std::string out;
  if (k == 0) {
    out = s;
  } else {
    if (s.size() <= k) s.insert(0, k + 1 - s.size(), '0');
    out = s.substr(0, s.size() - k) + "." + s.substr(s.size() - k);
    // trim trailing zeros but keep at least one fractional digit
    while (out.back() == '0' && out[out.size() - 2] != '.') out.pop_back();
  }
  return neg ? "-" + out : out;
}

__int128 int_to_i128_saturating(const Int& z) {
  static const Int kLim = Int(1) << 126;
  if (z >= kLim) return kI128Sat;
  if (z <= -kLim) return -kI128Sat;
  bool neg = z < 0;
  Int a = neg ? Int(-z) : z;
  unsigned __int128 acc = 0;
  for (size_t i = mpz_size(a.get_mpz_t()); i-- > 0;) {
    acc = (acc << 64) | mpz_getlimbn(a.get_mpz_t(), i);
  }
  __int128 v = static_cast<__int128>(acc);
  return neg ? -v : v;
}

__int128 rat_ceil_i128(const Rat& q) { return int_to_i128_saturating(rat_ceil(q)); }
__int128 rat_floor_i128(const Rat& q) { return int_to_i128_saturating(rat_floor(q)); }

Int int_from_i128(__int128 v) {
  bool neg = v < 0;
  unsigned __int128 a = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
  Int hi(static_cast<unsigned long>(a >> 64));
  Int out = (hi << 64) + static_cast<unsigned long>(a & ~0ULL);
  return neg ? Int(-out) : out;
}

}  // namespace iirforge
