#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace iirforge {

/// c = sign * odd * 2^shift; zero maps to {odd = 0}.
struct OddFundamental {
  std::uint64_t odd = 0;  // 0 encodes the zero constant
  int shift = 0;
  int sign = 1;
};
OddFundamental odd_fundamental(std::int64_t c);

/// Nonzero digits of the canonical signed digit representation.
int csd_nonzero_digits(std::uint64_t v);

/// Sound lower bound on the adders needed for a set of odd fundamentals > 1:
/// max(set size, max_t ceil(log2(csd digits of t))).
int adder_lower_bound(const std::vector<std::uint64_t>& fundamentals);

/// Shift-add DAG realizing a set of constants from a single input.
struct AdderGraph {
  static constexpr int kInput = -1;

  struct Node {
    std::uint64_t value;       // positive odd
    int left, right;           // node index or kInput
    int left_shift, right_shift;  // exactly one is 0
    int right_sign;            // +1 add, -1 subtract
  };
  struct Target {
    std::int64_t constant;
    int node;          // node index or kInput (value 1)
    int output_shift;  // |constant| = value << output_shift
    int sign;
  };

  std::vector<Node> nodes;      // topologically ordered
  std::vector<Target> targets;  // nonzero requested constants

  int adder_count() const { return static_cast<int>(nodes.size()); }
  /// Recompute every node from its parents and check target mapping.
  bool validate() const;
};

struct McmOptions {
  int cap = 8;            // adder budget; minimum above it reports infeasible
  int max_bits_slack = 0; // extra value bit length beyond max target bits + 1
};

/// Provably minimal-adder graph realizing every target's odd fundamental
/// from 1, or nullopt when the minimum exceeds options.cap.
/// Target magnitudes are limited to 2^24.
std::optional<AdderGraph> solve_mcm(const std::vector<std::int64_t>& targets,
                                    const McmOptions& options = {});

/// Minimal adder count only (memoized across calls, thread-safe).
std::optional<int> mcm_cost(const std::vector<std::int64_t>& targets,
                            const McmOptions& options = {});

std::string emit_dot(const AdderGraph& graph, const std::string& name);

}  // namespace iirforge
