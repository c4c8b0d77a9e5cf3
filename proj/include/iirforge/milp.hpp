#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iirforge/rational.hpp"
#include "iirforge/search.hpp"

namespace iirforge {

enum class VarKind { Continuous, Integer, Binary };
enum class Relation { Le, Eq, Ge };

struct LinearModel {
  struct Variable {
    std::string name;
    VarKind kind = VarKind::Continuous;
    Rat lower, upper;
  };
  struct Term {
    int var;  // index into variables
    Rat coefficient;
  };
  struct Constraint {
    std::string name;
    std::vector<Term> terms;
    Relation relation = Relation::Le;
    Rat rhs;
  };
  struct BigM {
    std::string constraint;
    Rat value;  // derived bound product, recorded for audit
  };

  std::vector<Variable> variables;
  std::vector<Constraint> constraints;
  std::vector<BigM> big_m_audit;
  bool maximize = false;
  std::vector<Term> objective;
  std::vector<std::string> header_comments;

  int add_variable(const std::string& name, VarKind kind, const Rat& lo, const Rat& hi);
  int find_variable(const std::string& name) const;  // -1 when absent
};

/// x = sum 2^i t_i with binaries t_i, i = 0..ceil(log2 xbar)+1.
/// Returns the indices of the new bit variables.
std::vector<int> binary_expansion(LinearModel& model, int x);

/// Signed product z = x y via |.| splits, sign binaries and per-bit big-M
/// products. Returns the index of z, bounded by +/- xbar ybar.
int signed_product(LinearModel& model, int x, int y);

enum class ModelMode { Feasibility, MinB0, MaxB0, MinB1, MaxB1, MinB2, MaxB2, MaxZeros };

struct ModelBoxes {
  std::array<std::pair<std::int64_t, std::int64_t>, 3> b;
  int g_a = 1, g_b = 0;
};

/// The linearized filter-design model over one (w, g_a, g_b) slice: integer
/// coefficient variables, bilinear products, per-grid-point magnitude
/// constraints, integer-strict stability, optional SBC, and zero-coefficient
/// glue binaries.
LinearModel build_design_model(const DesignProblem& problem, const ModelBoxes& boxes,
                               ModelMode mode);

/// LP-format export. Throws ModelExportError when any audited big-M exceeds
/// 2^24 (documented numerical-robustness cap).
struct ModelExportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
std::string export_lp(const LinearModel& model);

struct CheckResult {
  bool ok;
  std::string violated;  // first violated constraint name
};
/// Exact rational evaluation of every constraint; every model variable must
/// be present in the assignment.
CheckResult check_solution(const LinearModel& model, const std::map<std::string, Rat>& assignment);

/// Canonical auxiliary completion for a coefficient assignment: fills bits,
/// abs/sign variables, products and glue binaries from the five coefficients.
std::map<std::string, Rat> complete_assignment(const LinearModel& model,
                                               const DesignProblem& problem,
                                               const ModelBoxes& boxes,
                                               const QuantizedFilter& q);

}  // namespace iirforge
