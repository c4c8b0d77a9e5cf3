#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iirforge/rational.hpp"

namespace iirforge {

/// Magnitude bound over a band: a constant, or breakpoints with linear
/// interpolation. Values are exact rationals so grids stay exact.
struct BoundFunction {
  // constant iff omegas empty
  Rat constant = 0;
  std::vector<Rat> omegas;  // strictly increasing
  std::vector<Rat> values;

  bool is_constant() const { return omegas.empty(); }
  Rat eval(const Rat& omega) const;
  double eval_d(double omega) const;
  /// sup over [lo, hi] (from breakpoints; exact)
  Rat max_on(const Rat& lo, const Rat& hi) const;
  /// max |slope| over [lo, hi]; 0 for constants
  Rat max_slope_on(const Rat& lo, const Rat& hi) const;
};

struct BandSpec {
  Rat omega_lo, omega_hi;  // normalized, units of pi, within [0, 1]
  BoundFunction beta_lo, beta_hi;

  void validate() const;  // throws on violated invariants
};

struct FrequencySpec {
  std::string name;
  std::vector<BandSpec> bands;  // ordered, pairwise non-overlapping interiors

  void validate() const;
  /// Band containing omega (inclusive endpoints), or nullopt in a gap.
  std::optional<std::size_t> band_of(const Rat& omega) const;
};

/// Denominator of the canonical grid cosines: decisions on the discretized
/// problem are made against cos values rounded to this dyadic precision,
/// identically in the search engine, satisfies_grid and the exported model.
inline constexpr std::int64_t kCosDen = std::int64_t{1} << 30;

std::int64_t canonical_cos(double angle_times_pi);  // round(2^30 cos(pi x))

struct GridPoint {
  Rat omega;
  double omega_d;
  std::int64_t c1, c2;  // canonical 2^30 cos(pi w), 2^30 cos(2 pi w)
  Rat beta_lo_sq, beta_hi_sq;
};

struct FrequencyGrid {
  std::vector<GridPoint> points;
};

/// Built-in published benchmark specs. k must be absent for lp4/hp0.
/// tau is the relative tolerance band applied to hp0's tabulated response.
FrequencySpec builtin_benchmark(const std::string& name, std::optional<int> k = std::nullopt,
                                const Rat& tau = Rat(1, 50));

/// All (name, k) pairs of the published benchmark set, in table order.
std::vector<std::pair<std::string, std::optional<int>>> builtin_benchmark_list();

/// Uniform endpoint-inclusive discretization, points_per_band >= 2 per band.
FrequencyGrid discretize(const FrequencySpec& spec, int points_per_band);

/// Extends the grid with one frequency; duplicates are ignored.
/// Throws if omega lies in no band of spec.
void append_frequency(FrequencyGrid& grid, const Rat& omega, const FrequencySpec& spec);

/// Key-value spec file (schema documented in the README).
FrequencySpec load_spec_file(const std::string& path);
std::string spec_to_file_text(const FrequencySpec& spec);

}  // namespace iirforge
