#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iirforge/fixedpoint.hpp"
#include "iirforge/mcm.hpp"
#include "iirforge/rational.hpp"

namespace iirforge {

/// Upper bound on sum |h_k| for h the impulse response of 1 / A(z),
/// within tol of the true value. Throws on unstable denominators.
double wcpg_denominator(const Rat& a1, const Rat& a2, double tol = 1e-9);

/// Upper bound on sum |h_k| for the full filter B / A.
double wcpg_filter(const QuantizedFilter& q, double tol = 1e-9);

/// G = ceil(log2(W + 1)) + 1 where W = wcpg_denominator: one truncation of
/// magnitude < 2^l_ext injected per cycle propagates through 1/A with total
/// error < W 2^l_ext, and 2^(l_out-1) is left for the final rounding.
int guard_bits(const Rat& a1, const Rat& a2, double tol = 1e-9);

struct FixFormat {
  int msb = 0;
  int lsb = 0;
  int width() const { return msb - lsb + 1; }
};

struct Datapath {
  QuantizedFilter filter;
  AdderGraph graph_a, graph_b;
  FixFormat in, out;
  int guard = 1;
  int l_ext = 0;

  // derived signal formats (exact growth, no internal truncation)
  FixFormat products_b;  // all b_k x products, aligned at lsb_in + lsb(b)
  FixFormat feedback_a;  // all a_k y products, aligned at l_ext + lsb(a)
  FixFormat accumulator; // common alignment before the truncation to l_ext
  FixFormat state;       // delay registers
  FixFormat y_ext;       // accumulator output truncated to l_ext

  int total_adders() const;
};

/// Formats every internal signal from the WCPG bound so that no addition can
/// overflow; msb_out defaults to msb_in + ceil(log2 wcpg_filter) when not
/// overridden (>= -100 means override).
Datapath size_datapath(const QuantizedFilter& q, const AdderGraph& graph_a,
                       const AdderGraph& graph_b, FixFormat in, int lsb_out,
                       int msb_out_override = -1000);

/// Cycle-accurate evaluation of the sized datapath: exact shift-add products,
/// floor truncation to l_ext at the accumulator, round-half-up to lsb_out at
/// the output. Inputs and outputs are integer codes. Throws on any overflow
/// of a sized signal (must never fire when sizing is correct).
std::vector<std::int64_t> simulate_fixed(const Datapath& dp,
                                         const std::vector<std::int64_t>& inputs);

/// Exact rational reference recurrence y_n = sum b_k x_{n-k} - sum a_k y_{n-k}
/// on the same integer input codes (scaled by 2^lsb_in).
std::vector<Rat> simulate_reference(const QuantizedFilter& q, FixFormat in,
                                    const std::vector<std::int64_t>& inputs);

/// Synthesizable VHDL entity for the datapath.
std::string emit_vhdl(const Datapath& dp, const std::string& entity_name);

}  // namespace iirforge
