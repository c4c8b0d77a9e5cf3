#include "iirforge/bounds.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "iirforge/fixedpoint.hpp"

namespace iirforge {

ABox a_bounds() { return {}; }

std::array<std::array<double, 3>, 3> q_matrix(double omega) {
  double c1 = std::cos(M_PI * omega), c2 = std::cos(2 * M_PI * omega);
  return {{{1, c1, c2}, {c1, 1, c1}, {c2, c1, 1}}};
}

namespace {

constexpr double kPdTol = 1e-9;

// Leading-minor PD test and inverse diagonal by cofactors for symmetric 3x3.
bool pd_inverse_diag(const std::array<std::array<double, 3>, 3>& m, std::array<double, 3>& diag) {
  double d1 = m[0][0];
  double d2 = m[0][0] * m[1][1] - m[0][1] * m[0][1];
  double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[1][2]) -
               m[0][1] * (m[0][1] * m[2][2] - m[1][2] * m[0][2]) +
               m[0][2] * (m[0][1] * m[1][2] - m[1][1] * m[0][2]);
  if (d1 <= kPdTol || d2 <= kPdTol || det <= kPdTol) return false;
  diag[0] = (m[1][1] * m[2][2] - m[1][2] * m[1][2]) / det;
  diag[1] = (m[0][0] * m[2][2] - m[0][2] * m[0][2]) / det;
  diag[2] = (m[0][0] * m[1][1] - m[0][1] * m[0][1]) / det;
  return true;
}

}  // namespace

BBox b_bounds(const FrequencySpec& spec, const FrequencyGrid& grid) {
  (void)spec;
  if (grid.points.size() < 2) throw std::invalid_argument("b_bounds: need >= 2 grid points");
  // 32-point subsample, evenly strided
  std::vector<std::size_t> idx;
  std::size_t n = grid.points.size();
  std::size_t take = std::min<std::size_t>(32, n);
  for (std::size_t i = 0; i < take; ++i) idx.push_back(i * (n - 1) / (take - 1));

  BBox box;
  box.bound = {HUGE_VAL, HUGE_VAL, HUGE_VAL};
  bool any_pd = false;
  for (std::size_t ii = 0; ii < idx.size(); ++ii) {
    for (std::size_t jj = ii + 1; jj < idx.size(); ++jj) {
      const GridPoint& pi = grid.points[idx[ii]];
      const GridPoint& pj = grid.points[idx[jj]];
      auto qi = q_matrix(pi.omega_d), qj = q_matrix(pj.omega_d);
      std::array<std::array<double, 3>, 3> m;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m[r][c] = qi[r][c] + qj[r][c];
      std::array<double, 3> diag;
      if (!pd_inverse_diag(m, diag)) continue;
      any_pd = true;
      double r = 16 * (pi.beta_hi_sq.get_d() + pj.beta_hi_sq.get_d());
      for (int k = 0; k < 3; ++k) {
        double bk = std::sqrt(std::max(0.0, r * diag[k])) * (1 + 1e-9);  // outer inflation
        if (bk < box.bound[k]) box.bound[k] = bk;
      }
    }
  }
  if (!any_pd) throw std::runtime_error("b_bounds: no positive-definite frequency pair");
  double maxb = std::max({box.bound[0], box.bound[1], box.bound[2]});
  box.g_b = maxb > 0 ? msb_for_bound(maxb) : 0;
  return box;
}

}  // namespace iirforge
