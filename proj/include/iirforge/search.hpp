#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "iirforge/bounds.hpp"
#include "iirforge/filterspec.hpp"
#include "iirforge/fixedpoint.hpp"
#include "iirforge/mcm.hpp"

namespace iirforge {

struct SolveOptions {
  bool use_sbc = true;
  int mcm_cap = 8;
  double time_limit_s = 600.0;
  int threads = 0;  // 0: IIRFORGE_THREADS env or hardware concurrency
  std::optional<std::pair<int, int>> g_b_range;  // inclusive; default [g_b_upper-2, g_b_upper]
  std::optional<std::pair<int, int>> g_a_range;  // inclusive; default [g_a_upper-2, g_a_upper]
  int points_per_band = 300;
  bool collect_feasible = false;  // exhaustive runs may record every feasible filter
  std::optional<QuantizedFilter> seed;  // known-feasible incumbent (wordlength sweeps)
};

struct DesignProblem {
  FrequencySpec spec;
  FrequencyGrid grid;
  int w = 4;
  SolveOptions options;
};

DesignProblem make_problem(const FrequencySpec& spec, int w, const SolveOptions& options = {});

enum class SolveStatus { Optimal, Infeasible, TimedOut };

struct DesignResult {
  SolveStatus status = SolveStatus::Infeasible;
  QuantizedFilter filter;
  AdderGraph graph_a, graph_b;
  int adders_mult_a = 0, adders_mult_b = 0;
  int adders_mult = 0;        // A_M
  int adders_structural = 0;  // A_S
  int adders_total = 0;       // A = A_M + A_S
  std::array<bool, 5> zero_coefficient{};  // zeta for b0,b1,b2,a1,a2
  // exhaustiveness certificate
  std::uint64_t a_pairs_enumerated = 0;
  std::uint64_t candidates_checked = 0;
  std::uint64_t candidates_feasible = 0;
  std::uint64_t candidates_cost_pruned = 0;
  double seconds = 0;
  // verification (filled by design_with_verification)
  bool verified = false;
  int verify_iterations = 0;
  std::vector<double> appended_frequencies;
  std::vector<QuantizedFilter> feasible_set;  // only with options.collect_feasible
};

/// A_S of the TDF-II structure: each nonzero b past the first feeds one
/// structural adder, each nonzero a feeds one.
int structural_adders(const QuantizedFilter& q);

/// Symmetry-breaking half-space Sigma_1: b0 >= |b2|.
bool sbc_region(std::int64_t b0, std::int64_t b1, std::int64_t b2);

/// Orbit under sign flip and b0/b2 exchange, deduplicated (1, 2 or 4 triples).
std::vector<std::array<std::int64_t, 3>> symmetric_orbit(std::int64_t b0, std::int64_t b1,
                                                         std::int64_t b2);

/// Exact global optimum over all quantized filters at word length w with
/// g_a and g_b ranging over the configured MSB windows.
DesignResult solve(const DesignProblem& problem);

/// solve + a-posteriori continuous verification; counterexample frequencies
/// are appended to the grid and the problem re-solved until verified.
DesignResult design_with_verification(DesignProblem& problem, double verify_step = 1e-4);

struct SweepRow {
  int w;
  DesignResult result;
};
std::vector<SweepRow> wordlength_sweep(const FrequencySpec& spec, int w_lo, int w_hi,
                                       const SolveOptions& options = {});

/// Exact integer bounds on each b'_k over the feasible set of one
/// (w, g_a, g_b) slice, from directional exhaustive runs. nullopt when the
/// slice is infeasible.
struct TightBox {
  std::array<std::pair<std::int64_t, std::int64_t>, 3> b;
};
std::optional<TightBox> tighten_bounds(const DesignProblem& problem, int g_a, int g_b);

}  // namespace iirforge
