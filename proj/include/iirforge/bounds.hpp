#pragma once

#include <array>

#include "iirforge/filterspec.hpp"

namespace iirforge {

struct ABox {
  // open stability box and the MSB upper bound for the a coefficients
  double a1_lo = -2, a1_hi = 2;
  double a2_lo = -1, a2_hi = 1;
  int g_a = 1;
};

/// Stability-derived bounds; independent of the spec.
ABox a_bounds();

/// Q_kl = cos((k-l) pi omega), symmetric 3x3 with spectrum
/// {0, 1-cos(2 pi omega), 2+cos(2 pi omega)}.
std::array<std::array<double, 3>, 3> q_matrix(double omega);

struct BBox {
  std::array<double, 3> bound;  // |b_k| <= bound[k]
  int g_b = 0;
};

/// Valid outer box for the real b coefficients from paired ellipsoid
/// constraints b^T (Q_i + Q_j) b <= 16 (bhi_i^2 + bhi_j^2); the coordinate
/// maximum over an ellipsoid is sqrt(r * (M^-1)_kk). Pairs are drawn from a
/// 32-point subsample of the grid; positive definiteness is tested on leading
/// minors with tolerance 1e-9. Throws when no positive-definite pair exists.
BBox b_bounds(const FrequencySpec& spec, const FrequencyGrid& grid);

}  // namespace iirforge
