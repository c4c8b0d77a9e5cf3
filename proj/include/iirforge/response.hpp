#pragma once

#include <optional>
#include <string>
#include <variant>

#include "iirforge/filterspec.hpp"
#include "iirforge/fixedpoint.hpp"

namespace iirforge {

/// |B(e^{j pi w})|^2 = sum_kl b_k b_l cos((k-l) pi w). Always >= 0.
double mag2_num(double b0, double b1, double b2, double omega);

/// |A(e^{j pi w})|^2 with a0 = 1.
double mag2_den(double a1, double a2, double omega);

/// Strict stability triangle: -2 < a1 < 2 and |a1| - 1 < a2 < 1.
bool is_stable(double a1, double a2);
bool is_stable(const Rat& a1, const Rat& a2);

struct Violation {
  Rat omega;
  enum class Side { Lower, Upper } side;
};

/// Exact per-point feasibility against the grid's canonical rationals.
/// Returns the first violated point, or nullopt when every point passes.
/// Throws if the filter is unstable.
std::optional<Violation> satisfies_grid(const QuantizedFilter& q, const FrequencyGrid& grid);

/// Envelope |A|^2 beta^2 of one grid point for a fixed denominator, exact.
struct GridEnvelope {
  std::vector<Rat> lo, hi;  // indexed like grid.points
};
GridEnvelope grid_envelope(const QuantizedFilter& q, const FrequencyGrid& grid);

struct Counterexample {
  Rat omega;
  double slack;  // negative or uncertifiable margin at omega
};

/// Derivative-bounded dense scan certifying the continuous constraint
/// beta_lo(w) <= |H| <= beta_hi(w) over every band. `step` is the sampling
/// step in normalized frequency; intervals are certified with Lipschitz
/// bounds and bisected adaptively where the margin is tight.
/// Returns nullopt when verified; otherwise a counterexample candidate.
std::optional<Counterexample> verify_spec(const QuantizedFilter& q, const FrequencySpec& spec,
                                          double step = 1e-4);

/// omega, |H|, beta_lo, beta_hi rows for plotting; gaps have empty bounds.
std::string response_csv(const QuantizedFilter& q, const FrequencySpec& spec, int samples = 1024);

}  // namespace iirforge
