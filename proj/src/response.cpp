#include "iirforge/response.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace iirforge {

double mag2_num(double b0, double b1, double b2, double omega) {
  double c1 = std::cos(M_PI * omega), c2 = std::cos(2 * M_PI * omega);
  return b0 * b0 + b1 * b1 + b2 * b2 + 2 * (b0 * b1 + b1 * b2) * c1 + 2 * b0 * b2 * c2;
}

double mag2_den(double a1, double a2, double omega) {
  double c1 = std::cos(M_PI * omega), c2 = std::cos(2 * M_PI * omega);
  return 1 + a1 * a1 + a2 * a2 + 2 * a1 * (1 + a2) * c1 + 2 * a2 * c2;
}

bool is_stable(double a1, double a2) {
  return a1 > -2 && a1 < 2 && a2 < 1 && a2 > std::abs(a1) - 1;
}

bool is_stable(const Rat& a1, const Rat& a2) {
  Rat abs1 = a1 < 0 ? Rat(-a1) : a1;
  return a1 > -2 && a1 < 2 && a2 < 1 && a2 > abs1 - 1;
}

namespace {

struct QuadCoeffs {
  // p0 + p1 c1 + p2 c2 over integer coefficients
  Int p0, p1, p2;
};

QuadCoeffs num_coeffs(std::int64_t b0, std::int64_t b1, std::int64_t b2) {
  Int B0(static_cast<long>(b0)), B1(static_cast<long>(b1)), B2(static_cast<long>(b2));
  return {B0 * B0 + B1 * B1 + B2 * B2, 2 * (B0 * B1 + B1 * B2), 2 * B0 * B2};
}

QuadCoeffs den_coeffs(const QuantizedFilter& q) {
  // a0 folded in as an integer at the a-format scale
  Int A0 = Int(1) << (q.fmt_a.w - 1 - q.fmt_a.g);
  Int A1(static_cast<long>(q.a1)), A2(static_cast<long>(q.a2));
  return {A0 * A0 + A1 * A1 + A2 * A2, 2 * (A0 * A1 + A1 * A2), 2 * A0 * A2};
}

Rat eval_quad(const QuadCoeffs& c, const GridPoint& p, int lsb) {
  // value = (p0 + p1 c1 + p2 c2) * 4^lsb with canonical cosines
  Int acc = c.p0 * kCosDen + c.p1 * p.c1 + c.p2 * p.c2;
  return Rat(acc) / kCosDen * pow2(2 * lsb);
}

}  // namespace

GridEnvelope grid_envelope(const QuantizedFilter& q, const FrequencyGrid& grid) {
  GridEnvelope env;
  QuadCoeffs da = den_coeffs(q);
  int la = q.fmt_a.lsb();
  env.lo.reserve(grid.points.size());
  env.hi.reserve(grid.points.size());
  for (const auto& p : grid.points) {
    Rat a2v = eval_quad(da, p, la);
    env.lo.push_back(a2v * p.beta_lo_sq);
    env.hi.push_back(a2v * p.beta_hi_sq);
  }
  return env;
}

std::optional<Violation> satisfies_grid(const QuantizedFilter& q, const FrequencyGrid& grid) {
  auto rc = q.to_real();
  if (!is_stable(rc.a1, rc.a2)) throw std::invalid_argument("satisfies_grid: unstable filter");
  QuadCoeffs nb = num_coeffs(q.b0, q.b1, q.b2);
  GridEnvelope env = grid_envelope(q, grid);
  int lb = q.fmt_b.lsb();
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    Rat b2v = eval_quad(nb, grid.points[i], lb);
    if (b2v < env.lo[i]) return Violation{grid.points[i].omega, Violation::Side::Lower};
    if (b2v > env.hi[i]) return Violation{grid.points[i].omega, Violation::Side::Upper};
  }
  return std::nullopt;
}

namespace {

struct RealFilter {
  double a1, a2, b0, b1, b2;
};

// slack pair (g_lo, g_hi) at omega: g_lo = |B|^2 - |A|^2 blo^2, g_hi = |A|^2 bhi^2 - |B|^2
struct Slacks {
  double lo, hi;
};

Slacks slacks_at(const RealFilter& f, const BandSpec& band, double w) {
  double nb = mag2_num(f.b0, f.b1, f.b2, w);
  double na = mag2_den(f.a1, f.a2, w);
  double blo = band.beta_lo.eval_d(w), bhi = band.beta_hi.eval_d(w);
  return {nb - na * blo * blo, na * bhi * bhi - nb};
}

}  // namespace

std::optional<Counterexample> verify_spec(const QuantizedFilter& q, const FrequencySpec& spec,
                                          double step) {
  auto rc = q.to_real();
  if (!is_stable(rc.a1, rc.a2)) throw std::invalid_argument("verify_spec: unstable filter");
  RealFilter f{rc.a1.get_d(), rc.a2.get_d(), rc.b0.get_d(), rc.b1.get_d(), rc.b2.get_d()};

  for (const auto& band : spec.bands) {
    double lo = band.omega_lo.get_d(), hi = band.omega_hi.get_d();
    // Lipschitz constants (w in units of pi, so d/dw carries a pi factor):
    //   L_B  = 2 pi (|b0 b1| + |b1 b2| + 2 |b0 b2|)
    //   L_A  = 2 pi (|a1 (1+a2)| + 2 |a2|)         (a0 = 1)
    //   L(|A|^2 beta^2) <= L_A max(beta^2) + max|A|^2 L(beta^2)
    double LB = 2 * M_PI *
                (std::abs(f.b0 * f.b1) + std::abs(f.b1 * f.b2) + 2 * std::abs(f.b0 * f.b2));
    double LA = 2 * M_PI * (std::abs(f.a1 * (1 + f.a2)) + 2 * std::abs(f.a2));
    double amax2 = (1 + std::abs(f.a1) + std::abs(f.a2)) * (1 + std::abs(f.a1) + std::abs(f.a2));
    double bmax_lo = band.beta_lo.max_on(band.omega_lo, band.omega_hi).get_d();
    double bmax_hi = band.beta_hi.max_on(band.omega_lo, band.omega_hi).get_d();
    double slope_lo = band.beta_lo.max_slope_on(band.omega_lo, band.omega_hi).get_d();
    double slope_hi = band.beta_hi.max_slope_on(band.omega_lo, band.omega_hi).get_d();
    double Llo = LA * bmax_lo * bmax_lo + amax2 * 2 * bmax_lo * slope_lo;
    double Lhi = LA * bmax_hi * bmax_hi + amax2 * 2 * bmax_hi * slope_hi;
    double Lg_lo = LB + Llo;  // Lipschitz bound for the lower-side slack
    double Lg_hi = LB + Lhi;
    const double kEvalErr = 1e-9 * (1 + amax2 * std::max(bmax_lo, bmax_hi) *
                                    std::max(bmax_lo, bmax_hi));

    // adaptive interval certification over [lo, hi]
    struct Iv {
      double a, b;
    };
    std::vector<Iv> stack;
    int nseg = std::max(1, static_cast<int>(std::ceil((hi - lo) / step)));
    for (int i = nseg; i-- > 0;)
      stack.push_back({lo + (hi - lo) * i / nseg, lo + (hi - lo) * (i + 1) / nseg});
    const double kMinWidth = 1e-12;
    while (!stack.empty()) {
      Iv iv = stack.back();
      stack.pop_back();
      double mid = 0.5 * (iv.a + iv.b);
      double radius = 0.5 * (iv.b - iv.a);
      Slacks s = slacks_at(f, band, mid);
      double need_lo = Lg_lo * radius + kEvalErr;
      double need_hi = Lg_hi * radius + kEvalErr;
      if (s.lo >= need_lo && s.hi >= need_hi) continue;
      if (s.lo < -kEvalErr || s.hi < -kEvalErr)
        return Counterexample{rat_from_double(mid), std::min(s.lo, s.hi)};
      if (iv.b - iv.a < kMinWidth)
        return Counterexample{rat_from_double(mid), std::min(s.lo, s.hi)};
      stack.push_back({iv.a, mid});
      stack.push_back({mid, iv.b});
    }
  }
  return std::nullopt;
}

std::string response_csv(const QuantizedFilter& q, const FrequencySpec& spec, int samples) {
  auto rc = q.to_real();
  RealFilter f{rc.a1.get_d(), rc.a2.get_d(), rc.b0.get_d(), rc.b1.get_d(), rc.b2.get_d()};
  std::ostringstream os;
  os << "omega,magnitude,beta_lo,beta_hi\n";
  for (int i = 0; i < samples; ++i) {
    double w = static_cast<double>(i) / (samples - 1);
    double mag = std::sqrt(std::max(0.0, mag2_num(f.b0, f.b1, f.b2, w)) /
                           mag2_den(f.a1, f.a2, w));
    os << w << "," << mag << ",";
    auto band = spec.band_of(rat_from_double(w));
    if (band) {
      os << spec.bands[*band].beta_lo.eval_d(w) << "," << spec.bands[*band].beta_hi.eval_d(w);
    } else {
      os << ",";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace iirforge
