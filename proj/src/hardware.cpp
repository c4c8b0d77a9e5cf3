#include "iirforge/hardware.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "iirforge/response.hpp"
#include "iirforge/search.hpp"

namespace iirforge {

namespace {

double max_pole_magnitude(double a1, double a2) {
  double disc = a1 * a1 - 4 * a2;
  if (disc >= 0) {
    double s = std::sqrt(disc);
    return std::max(std::abs((-a1 + s) / 2), std::abs((-a1 - s) / 2));
  }
  return std::sqrt(a2);  // complex pair, |p|^2 = a2
}

// sum |h_k| with the geometric tail envelope, N doubled until the tail is
// below tol and two successive bounds agree
double wcpg_sum(double a1, double a2, double b0, double b1, double b2, double tol) {
  if (a1 == 0 && a2 == 0) return std::abs(b0) + std::abs(b1) + std::abs(b2);
  double r = max_pole_magnitude(a1, a2);
  if (!(r < 1)) throw std::invalid_argument("wcpg: unstable denominator");
  double prev = -1;
  for (long n = 64;; n *= 2) {
    long double hm2 = 0, hm1 = 0, sum = 0, habs_n = 0, habs_n1 = 0;
    for (long k = 0; k <= n + 1; ++k) {
      long double h;
      if (k == 0)
        h = b0;
      else if (k == 1)
        h = b1 - a1 * hm1;
      else if (k == 2)
        h = b2 - a1 * hm1 - a2 * hm2;
      else
        h = -a1 * hm1 - a2 * hm2;
      sum += std::abs(static_cast<double>(h));
      if (k == n) habs_n = std::abs(static_cast<double>(h));
      if (k == n + 1) habs_n1 = std::abs(static_cast<double>(h));
      hm2 = hm1;
      hm1 = h;
    }
    double tail = static_cast<double>(habs_n + habs_n1) * r / (1 - r);
    double w = static_cast<double>(sum) + tail;
    if (tail < tol && prev >= 0 && std::abs(w - prev) < tol) return w;
    prev = w;
    if (n > (1L << 28)) return w;  // stability margin so small the tail converged anyway
  }
}

int smallest_pow2_geq(double x) {
  // smallest g with 2^g >= x, decided by exact double comparisons
  int g = static_cast<int>(std::ceil(std::log2(std::max(x, 1e-300))));
  while (std::ldexp(1.0, g) < x) ++g;
  while (g > -1000 && std::ldexp(1.0, g - 1) >= x) --g;
  return g;
}

// smallest msb such that codes of (msb, lsb) hold |value| <= bound:
// 2^msb - 2^lsb >= bound
int msb_for(const Rat& bound, int lsb) {
  int m = lsb;
  while (pow2(m) - pow2(lsb) < bound) ++m;
  return m;
}

std::uint64_t max_node_value(const AdderGraph& g, const QuantizedFilter&, bool a_side) {
  std::uint64_t m = 1;
  for (const auto& n : g.nodes) m = std::max(m, n.value);
  (void)a_side;
  return m;
}

}  // namespace

double wcpg_denominator(const Rat& a1, const Rat& a2, double tol) {
  if (!is_stable(a1, a2)) throw std::invalid_argument("wcpg_denominator: unstable");
  if (a1 == 0 && a2 == 0) return 1.0;
  return wcpg_sum(a1.get_d(), a2.get_d(), 1, 0, 0, tol);
}

double wcpg_filter(const QuantizedFilter& q, double tol) {
  auto rc = q.to_real();
  if (!is_stable(rc.a1, rc.a2)) throw std::invalid_argument("wcpg_filter: unstable");
  return wcpg_sum(rc.a1.get_d(), rc.a2.get_d(), rc.b0.get_d(), rc.b1.get_d(), rc.b2.get_d(),
                  tol);
}

int guard_bits(const Rat& a1, const Rat& a2, double tol) {
  double w = wcpg_denominator(a1, a2, tol);
  return smallest_pow2_geq(w + 1) + 1;
}

int Datapath::total_adders() const {
  return graph_a.adder_count() + graph_b.adder_count() + structural_adders(filter);
}

Datapath size_datapath(const QuantizedFilter& q, const AdderGraph& graph_a,
                       const AdderGraph& graph_b, FixFormat in, int lsb_out,
                       int msb_out_override) {
  auto rc = q.to_real();
  if (!is_stable(rc.a1, rc.a2)) throw std::invalid_argument("size_datapath: unstable");
  Datapath dp;
  dp.filter = q;
  dp.graph_a = graph_a;
  dp.graph_b = graph_b;
  dp.in = in;

  double wf = wcpg_filter(q);
  double wa = wcpg_denominator(rc.a1, rc.a2);
  dp.guard = guard_bits(rc.a1, rc.a2);
  dp.l_ext = lsb_out - dp.guard;
  int m_out = msb_out_override > -1000 ? msb_out_override
                                       : in.msb + smallest_pow2_geq(wf);
  dp.out = {m_out, lsb_out};

  const Rat xmax = pow2(in.msb);
  const Rat y_bound = rat_from_double(wf) * xmax + rat_from_double(wa) * pow2(dp.l_ext);

  const int lsb_b = q.fmt_b.lsb(), lsb_a = q.fmt_a.lsb();
  const Rat node_b = Rat(static_cast<unsigned long>(max_node_value(graph_b, q, false)));
  const Rat coef_b =
      std::max({Rat(static_cast<long>(std::llabs(q.b0))),
                Rat(static_cast<long>(std::llabs(q.b1))),
                Rat(static_cast<long>(std::llabs(q.b2))), Rat(1)});
  dp.products_b = {msb_for(std::max(node_b, coef_b) * pow2(lsb_b) * xmax, in.lsb + lsb_b),
                   in.lsb + lsb_b};
  const Rat node_a = Rat(static_cast<unsigned long>(max_node_value(graph_a, q, true)));
  const Rat coef_a = std::max({Rat(static_cast<long>(std::llabs(q.a1))),
                               Rat(static_cast<long>(std::llabs(q.a2))), Rat(1)});
  dp.feedback_a = {
      msb_for(std::max(node_a, coef_a) * pow2(lsb_a) * y_bound, dp.l_ext + lsb_a),
      dp.l_ext + lsb_a};

  const int l_c = std::min(dp.products_b.lsb, dp.feedback_a.lsb);
  auto rabs = [](const Rat& r) { return r < 0 ? Rat(-r) : r; };
  const Rat s2_bound = rabs(rc.b2) * xmax + rabs(rc.a2) * y_bound;
  const Rat s1_bound = rabs(rc.b1) * xmax + rabs(rc.a1) * y_bound + s2_bound;
  const Rat acc_bound = rabs(rc.b0) * xmax + s1_bound;
  dp.state = {msb_for(s1_bound, l_c), l_c};
  dp.accumulator = {msb_for(acc_bound, l_c), l_c};
  dp.y_ext = {msb_for(y_bound + pow2(dp.l_ext), dp.l_ext), dp.l_ext};
  return dp;
}

std::vector<std::int64_t> simulate_fixed(const Datapath& dp,
                                         const std::vector<std::int64_t>& inputs) {
  using i64 = std::int64_t;
  const int lsb_b = dp.filter.fmt_b.lsb(), lsb_a = dp.filter.fmt_a.lsb();
  const int l_c = dp.accumulator.lsb;
  const int sh_b = (dp.in.lsb + lsb_b) - l_c;
  const int sh_a = (dp.l_ext + lsb_a) - l_c;
  const int cut_ext = dp.l_ext - l_c;      // >= 0: accumulator truncation amount
  const int cut_out = dp.out.lsb - dp.l_ext;  // = guard bits
  if (sh_b < 0 || sh_a < 0 || cut_out <= 0)
    throw std::logic_error("simulate_fixed: inconsistent datapath alignment");

  auto check = [](i64 v, const FixFormat& f, const char* what) {
    i64 lim = i64{1} << (f.msb - f.lsb);
    if (v < -lim || v > lim - 1)
      throw std::overflow_error(std::string("simulate_fixed: overflow in ") + what);
    return v;
  };
  auto floor_shift = [](i64 v, int s) { return s <= 0 ? (v << -s) : (v >> s); };

  const i64 in_lim = i64{1} << (dp.in.msb - dp.in.lsb);
  std::vector<i64> out;
  out.reserve(inputs.size());
  i64 s1 = 0, s2 = 0, y = 0;
  const i64 half_out = i64{1} << (cut_out - 1);
  for (i64 x : inputs) {
    if (x < -in_lim || x > in_lim - 1)
      throw std::invalid_argument("simulate_fixed: input out of format range");
    // multiplier blocks are exact shift-add networks; their node values are
    // checked against the product format
    for (const auto& n : dp.graph_b.nodes)
      check(static_cast<i64>(n.value) * x, dp.products_b, "b multiplier block");
    for (const auto& n : dp.graph_a.nodes)
      check(static_cast<i64>(n.value) * y, dp.feedback_a, "a multiplier block");
    const i64 p0 = check(dp.filter.b0 * x, dp.products_b, "b0 x");
    const i64 p1 = check(dp.filter.b1 * x, dp.products_b, "b1 x");
    const i64 p2 = check(dp.filter.b2 * x, dp.products_b, "b2 x");
    const i64 acc = check((p0 << sh_b) + s1, dp.accumulator, "accumulator");
    y = check(floor_shift(acc, cut_ext), dp.y_ext, "y_ext");
    const i64 f1 = check(dp.filter.a1 * y, dp.feedback_a, "a1 y");
    const i64 f2 = check(dp.filter.a2 * y, dp.feedback_a, "a2 y");
    s1 = check((p1 << sh_b) - (f1 << sh_a) + s2, dp.state, "state s1");
    s2 = check((p2 << sh_b) - (f2 << sh_a), dp.state, "state s2");
    out.push_back(check((y + half_out) >> cut_out, dp.out, "output rounding"));
  }
  return out;
}

std::vector<Rat> simulate_reference(const QuantizedFilter& q, FixFormat in,
                                    const std::vector<std::int64_t>& inputs) {
  auto rc = q.to_real();
  const Rat sx = pow2(in.lsb);
  std::vector<Rat> out;
  out.reserve(inputs.size());
  Rat x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::int64_t xi : inputs) {
    Rat x = Rat(static_cast<long>(xi)) * sx;
    Rat y = rc.b0 * x + rc.b1 * x1 + rc.b2 * x2 - rc.a1 * y1 - rc.a2 * y2;
    out.push_back(y);
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
  }
  return out;
}

namespace {

std::string signal_name(const char* prefix, std::uint64_t value) {
  return std::string(prefix) + "_n" + std::to_string(value);
}

// shift-add expression for one adder-graph node over already declared parents
void emit_graph(std::ostringstream& os, const AdderGraph& g, const char* prefix,
                const std::string& input_signal, int width) {
  auto parent = [&](int idx) {
    return idx == AdderGraph::kInput ? input_signal
                                     : signal_name(prefix, g.nodes[static_cast<std::size_t>(idx)].value);
  };
  for (const auto& n : g.nodes) {
    std::string l = "shift_left(resize(" + parent(n.left) + ", " + std::to_string(width) +
                    "), " + std::to_string(n.left_shift) + ")";
    std::string r = "shift_left(resize(" + parent(n.right) + ", " + std::to_string(width) +
                    "), " + std::to_string(n.right_shift) + ")";
    os << "  " << signal_name(prefix, n.value) << " <= " << l
       << (n.right_sign < 0 ? " - " : " + ") << r << ";\n";
  }
}

std::string tap_expression(const AdderGraph& g, const char* prefix,
                           const std::string& input_signal, std::int64_t coefficient,
                           int width) {
  if (coefficient == 0) return "to_signed(0, " + std::to_string(width) + ")";
  OddFundamental f = odd_fundamental(coefficient);
  std::string base = f.odd == 1 ? input_signal : signal_name(prefix, f.odd);
  std::string e = "shift_left(resize(" + base + ", " + std::to_string(width) + "), " +
                  std::to_string(f.shift) + ")";
  if (f.sign < 0) e = "-" + e;
  return e;
}

}  // namespace

std::string emit_vhdl(const Datapath& dp, const std::string& entity_name) {
  std::ostringstream os;
  const int wx = dp.in.width(), wy = dp.out.width();
  const int wp = dp.products_b.width(), wf = dp.feedback_a.width();
  const int ws = dp.state.width(), wacc = dp.accumulator.width();
  const int wyext = dp.y_ext.width();
  const int l_c = dp.accumulator.lsb;
  const int sh_b = (dp.in.lsb + dp.filter.fmt_b.lsb()) - l_c;
  const int sh_a = (dp.l_ext + dp.filter.fmt_a.lsb()) - l_c;
  const int cut_ext = dp.l_ext - l_c;
  const int cut_out = dp.out.lsb - dp.l_ext;

  os << "-- generated by iirforge: second-order multiplierless IIR, TDF-II\n";
  os << "-- input (" << dp.in.msb << ", " << dp.in.lsb << "), output (" << dp.out.msb << ", "
     << dp.out.lsb << "), internal lsb " << dp.l_ext << " (" << dp.guard << " guard bits)\n";
  os << "library ieee;\nuse ieee.std_logic_1164.all;\nuse ieee.numeric_std.all;\n\n";
  os << "entity " << entity_name << " is\n  port (\n    clk : in std_logic;\n"
     << "    rst : in std_logic;\n    x   : in std_logic_vector(" << wx - 1
     << " downto 0);\n    y   : out std_logic_vector(" << wy - 1 << " downto 0)\n  );\n"
     << "end entity;\n\n";
  os << "architecture rtl of " << entity_name << " is\n";
  os << "  signal xs : signed(" << wx - 1 << " downto 0);\n";
  for (const auto& n : dp.graph_b.nodes)
    os << "  signal " << signal_name("xb", n.value) << " : signed(" << wp - 1
       << " downto 0);\n";
  for (const auto& n : dp.graph_a.nodes)
    os << "  signal " << signal_name("ya", n.value) << " : signed(" << wf - 1
       << " downto 0);\n";
  os << "  signal p0, p1, p2 : signed(" << wp - 1 << " downto 0);\n";
  os << "  signal f1, f2 : signed(" << wf - 1 << " downto 0);\n";
  os << "  signal s1, s2 : signed(" << ws - 1 << " downto 0) := (others => '0');\n";
  os << "  signal acc : signed(" << wacc - 1 << " downto 0);\n";
  os << "  signal y_ext : signed(" << wyext - 1 << " downto 0);\n";
  os << "  signal y_rnd : signed(" << wyext << " downto 0);\n";
  os << "begin\n";
  os << "  xs <= signed(x);\n\n";
  os << "  -- b multiplier block (exact shift-add network on x)\n";
  emit_graph(os, dp.graph_b, "xb", "xs", wp);
  os << "  p0 <= " << tap_expression(dp.graph_b, "xb", "xs", dp.filter.b0, wp) << ";\n";
  os << "  p1 <= " << tap_expression(dp.graph_b, "xb", "xs", dp.filter.b1, wp) << ";\n";
  os << "  p2 <= " << tap_expression(dp.graph_b, "xb", "xs", dp.filter.b2, wp) << ";\n\n";
  os << "  -- a multiplier block (on the truncated output)\n";
  emit_graph(os, dp.graph_a, "ya", "y_ext", wf);
  os << "  f1 <= " << tap_expression(dp.graph_a, "ya", "y_ext", dp.filter.a1, wf) << ";\n";
  os << "  f2 <= " << tap_expression(dp.graph_a, "ya", "y_ext", dp.filter.a2, wf) << ";\n\n";
  os << "  -- exact accumulation, one truncation to the extended lsb\n";
  os << "  acc <= shift_left(resize(p0, " << wacc << "), " << sh_b << ") + resize(s1, "
     << wacc << ");\n";
  os << "  y_ext <= resize(shift_right(acc, " << cut_ext << "), " << wyext << ");\n";
  os << "  y_rnd <= resize(y_ext, " << wyext + 1 << ") + to_signed(" << (1 << (cut_out - 1))
     << ", " << wyext + 1 << ");\n";
  os << "  y <= std_logic_vector(resize(shift_right(y_rnd, " << cut_out << "), " << wy
     << "));\n\n";
  os << "  registers : process (clk)\n  begin\n    if rising_edge(clk) then\n"
     << "      if rst = '1' then\n        s1 <= (others => '0');\n"
     << "        s2 <= (others => '0');\n      else\n";
  os << "        s1 <= resize(shift_left(resize(p1, " << ws << "), " << sh_b
     << ") - shift_left(resize(f1, " << ws << "), " << sh_a << ") + s2, " << ws << ");\n";
  os << "        s2 <= resize(shift_left(resize(p2, " << ws << "), " << sh_b
     << ") - shift_left(resize(f2, " << ws << "), " << sh_a << "), " << ws << ");\n";
  os << "      end if;\n    end if;\n  end process;\n\nend architecture;\n";
  return os.str();
}

}  // namespace iirforge
