#include "iirforge/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "iirforge/response.hpp"

namespace iirforge {

namespace {

using Clock = std::chrono::steady_clock;
using i64 = std::int64_t;
using i128 = __int128;

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("IIRFORGE_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// ----- candidate bookkeeping ------------------------------------------------

struct Candidate {
  int total = 0;
  int zeros = 0;
  i64 magsum = 0;
  QuantizedFilter q;
  int cost_a = 0, cost_b = 0, a_s = 0;
  bool valid = false;

  // tie-break: cost, more zeros, smaller magnitude sum, lexicographic
  bool better_than(const Candidate& o) const {
    if (!o.valid) return true;
    if (total != o.total) return total < o.total;
    if (zeros != o.zeros) return zeros > o.zeros;
    if (magsum != o.magsum) return magsum < o.magsum;
    auto key = [](const QuantizedFilter& q) {
      return std::array<i64, 7>{q.b0, q.b1, q.b2, q.a1, q.a2, q.fmt_b.g, q.fmt_a.g};
    };
    return key(q) < key(o.q);
  }
};

struct SharedState {
  std::atomic<int> best_cost{1 << 20};
  std::atomic<bool> timed_out{false};
  Clock::time_point deadline;
  bool has_deadline = false;

  bool expired() {
    if (!has_deadline) return false;
    if (timed_out.load(std::memory_order_relaxed)) return true;
    if (Clock::now() >= deadline) {
      timed_out.store(true, std::memory_order_relaxed);
      return true;
    }
    return false;
  }
};

// ----- per-slice data -------------------------------------------------------

struct APair {
  i64 a1, a2;
  int g_a;
  i64 a0;             // 2^(w-1-g_a), a0 = 1 in this pair's integer units
  int sh_num, sh_den; // envelope factor 4^(g_a-g_b) split into mpz shifts
  int cost = -1;      // exact a-block adder count, lazily filled
  int lower_bound = 0;
};

struct SliceGrid {
  std::vector<i64> c1, c2;
  std::vector<Int> lo_num, lo_den, hi_num, hi_den;  // squared beta bounds
};

// One word-length/g_b slab of the search space; a-pairs carry their own MSB
// position so every g_a of the window is enumerated in one pass.
struct Slice {
  int w, g_b;
  bool sbc;
  bool dedupe_b = false;  // drop all-even b triples already covered at g_b + 1
  std::array<std::pair<i64, i64>, 3> bbox;
  std::vector<APair> apairs;
  SliceGrid grid;
  std::size_t npts = 0;
};

void append_stable_pairs(std::vector<APair>& out, int w, int g_a, int g_b,
                         bool skip_even_pairs) {
  const i64 half = i64{1} << (w - 1);
  const i64 unit = i64{1} << (w - 1 - g_a);  // integer value of 1.0
  // |a1| < 2  <=>  |a1'| <= 2*unit - 1;  a2 < 1  <=>  a2' <= unit - 1
  const i64 a1_lim = std::min(half - 1, 2 * unit - 1);
  const i64 a2_hi = std::min(half - 1, unit - 1);
  const int delta2 = 2 * (g_a - g_b);
  for (i64 a1 = -a1_lim; a1 <= a1_lim; ++a1) {
    const i64 a2_lo = std::max(-half, (a1 < 0 ? -a1 : a1) - unit + 1);
    for (i64 a2 = a2_lo; a2 <= a2_hi; ++a2) {
      if (skip_even_pairs && (a1 % 2 == 0) && (a2 % 2 == 0)) continue;
      APair p;
      p.a1 = a1;
      p.a2 = a2;
      p.g_a = g_a;
      p.a0 = unit;
      p.sh_num = std::max(0, delta2);
      p.sh_den = std::max(0, -delta2);
      std::vector<std::uint64_t> funds;
      for (i64 v : {a1, a2}) {
        auto f = odd_fundamental(v);
        if (f.odd > 1) funds.push_back(f.odd);
      }
      std::sort(funds.begin(), funds.end());
      funds.erase(std::unique(funds.begin(), funds.end()), funds.end());
      p.lower_bound = adder_lower_bound(funds);
      out.push_back(p);
    }
  }
}

SliceGrid make_slice_grid(const FrequencyGrid& grid) {
  SliceGrid sg;
  for (const auto& p : grid.points) {
    sg.c1.push_back(p.c1);
    sg.c2.push_back(p.c2);
    sg.lo_num.push_back(p.beta_lo_sq.get_num());
    sg.lo_den.push_back(p.beta_lo_sq.get_den());
    sg.hi_num.push_back(p.beta_hi_sq.get_num());
    sg.hi_den.push_back(p.beta_hi_sq.get_den());
  }
  return sg;
}

// |B|^2 envelope value (scaled by the cosine denominator) for a b-triple at
// one grid point
inline i64 quad_value(const SliceGrid& g, std::size_t idx, i64 b0, i64 b1, i64 b2) {
  const i64 pb0 = b0 * b0 + b1 * b1 + b2 * b2;
  const i64 pb1 = 2 * (b0 * b1 + b1 * b2);
  const i64 pb2 = 2 * b0 * b2;
  return pb0 * kCosDen + pb1 * g.c1[idx] + pb2 * g.c2[idx];
}

// Working buffers for one a-pair, reused across pairs by each worker.
// Envelope rows are costly (exact bignum rounding), so they are produced
// lazily in adaptive check order.
struct PairWork {
  std::vector<i128> L, U;
  std::vector<char> ready;
  std::vector<std::size_t> order;  // adaptive check order over grid points
  Int tmp, van, den;
  const Slice* slice = nullptr;
  const APair* apair = nullptr;

  void attach(const Slice& s, const APair& a) {
    slice = &s;
    apair = &a;
    const std::size_t n = s.npts;
    L.resize(n);
    U.resize(n);
    if (order.size() != n) {
      order.resize(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
    }
    ready.assign(n, 0);
  }

  void promote(std::size_t pos) {
    if (pos > 0) std::swap(order[pos], order[pos - 1]);
  }

  void ensure(std::size_t idx) {
    if (ready[idx]) return;
    const Slice& s = *slice;
    const APair& a = *apair;
    const i64 pa0 = a.a0 * a.a0 + a.a1 * a.a1 + a.a2 * a.a2;
    const i64 pa1 = 2 * (a.a0 * a.a1 + a.a1 * a.a2);
    const i64 pa2 = 2 * a.a0 * a.a2;
    const i64 va = pa0 * kCosDen + pa1 * s.grid.c1[idx] + pa2 * s.grid.c2[idx];
    van = static_cast<long>(va);
    mpz_mul_2exp(van.get_mpz_t(), van.get_mpz_t(), static_cast<unsigned long>(a.sh_num));
    tmp = van * s.grid.lo_num[idx];
    den = s.grid.lo_den[idx];
    mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), static_cast<unsigned long>(a.sh_den));
    L[idx] = int_to_i128_saturating(ceil_div(tmp, den));
    tmp = van * s.grid.hi_num[idx];
    den = s.grid.hi_den[idx];
    mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), static_cast<unsigned long>(a.sh_den));
    U[idx] = int_to_i128_saturating(floor_div(tmp, den));
    ready[idx] = 1;
  }
};

// Kills an a-pair when no b in the box can satisfy some early-ordered grid
// point: |B|^2 is a nonnegative quadratic form, so its box maximum sits on a
// corner and its box minimum is bounded below by 0.
bool prepare_pair(const Slice& s, const APair& a, PairWork& wk) {
  wk.attach(s, a);
  const std::array<std::pair<i64, i64>, 3>& box = s.bbox;
  const std::size_t probes = std::min<std::size_t>(12, s.npts);
  for (std::size_t pos = 0; pos < probes; ++pos) {
    const std::size_t idx = wk.order[pos];
    wk.ensure(idx);
    i64 cmax = std::numeric_limits<i64>::min();
    for (int c = 0; c < 8; ++c) {
      const i64 v = quad_value(s.grid, idx, (c & 1) ? box[0].second : box[0].first,
                               (c & 2) ? box[1].second : box[1].first,
                               (c & 4) ? box[2].second : box[2].first);
      cmax = std::max(cmax, v);
    }
    if (static_cast<i128>(cmax) < wk.L[idx] || static_cast<i128>(0) > wk.U[idx]) {
      wk.promote(pos);
      return false;
    }
  }
  return true;
}

inline bool b_feasible(const Slice& s, PairWork& wk, i64 pb0, i64 pb1, i64 pb2) {
  const i64 k0 = pb0 * kCosDen;
  for (std::size_t pos = 0; pos < s.npts; ++pos) {
    const std::size_t idx = wk.order[pos];
    wk.ensure(idx);
    const i64 v = k0 + pb1 * s.grid.c1[idx] + pb2 * s.grid.c2[idx];
    if (static_cast<i128>(v) < wk.L[idx] || static_cast<i128>(v) > wk.U[idx]) {
      wk.promote(pos);
      return false;
    }
  }
  return true;
}

std::vector<i64> magnitude_sequence(i64 lo, i64 hi) {
  std::vector<i64> seq;
  seq.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (i64 m = 0; m <= std::max(std::llabs(lo), std::llabs(hi)); ++m) {
    if (m >= lo && m <= hi) seq.push_back(m);
    if (m > 0 && -m >= lo && -m <= hi) seq.push_back(-m);
  }
  return seq;
}

// --- exact integer windows of convex quadratics -----------------------------
//
// V(x) = A x^2 + B x + C with A > 0. Roots are located in doubles and then
// fixed up with exact評 evaluations, so windows over-approximate the feasible
// set and exclusions under-approximate the infeasible set: no candidate is
// ever dropped incorrectly.

struct IRange {
  i64 lo = 0, hi = -1;
  bool empty() const { return lo > hi; }
};

struct QuadPoly {
  i128 A, B, C;
  i128 operator()(i64 x) const { return A * x * x + B * x + C; }
  double vertex() const { return -static_cast<double>(B) / (2 * static_cast<double>(A)); }
  void roots(i128 level, double& r1, double& r2) const {
    double Ad = static_cast<double>(A), Bd = static_cast<double>(B);
    double Cd = static_cast<double>(C) - static_cast<double>(level);
    double disc = Bd * Bd - 4 * Ad * Cd;
    if (disc <= 0) {
      r1 = r2 = vertex();
      return;
    }
    double s = std::sqrt(disc);
    r1 = (-Bd - s) / (2 * Ad);
    r2 = (-Bd + s) / (2 * Ad);
  }
};

// {x in [lo,hi] : V(x) <= U}, exact
IRange quad_le_window(const QuadPoly& V, i128 U, i64 lo, i64 hi) {
  if (lo > hi) return {};
  i64 m = std::clamp(static_cast<i64>(std::floor(V.vertex())), lo, hi);
  if (m + 1 <= hi && V(m + 1) < V(m)) ++m;  // integer minimizer within range
  if (V(m) > U) return {};
  double r1, r2;
  V.roots(U, r1, r2);
  i64 wlo = std::clamp(static_cast<i64>(std::floor(r1)) - 1, lo, m);
  i64 whi = std::clamp(static_cast<i64>(std::ceil(r2)) + 1, m, hi);
  while (V(wlo) > U) ++wlo;  // terminates at m at the latest
  while (V(whi) > U) --whi;
  while (wlo - 1 >= lo && V(wlo - 1) <= U) --wlo;
  while (whi + 1 <= hi && V(whi + 1) <= U) ++whi;
  return {wlo, whi};
}

// maximal integer interval inside [lo,hi] with V(x) < L (around the vertex)
IRange quad_lt_interval(const QuadPoly& V, i128 L, i64 lo, i64 hi) {
  if (lo > hi) return {};
  i64 m = std::clamp(static_cast<i64>(std::floor(V.vertex())), lo, hi);
  if (m + 1 <= hi && V(m + 1) < V(m)) ++m;
  if (V(m) >= L) return {};
  double r1, r2;
  V.roots(L, r1, r2);
  i64 elo = std::clamp(static_cast<i64>(std::ceil(r1)) + 1, lo, m);
  i64 ehi = std::clamp(static_cast<i64>(std::floor(r2)) - 1, m, hi);
  while (V(elo) >= L) ++elo;  // terminates at m
  while (V(ehi) >= L) --ehi;
  while (elo - 1 >= lo && V(elo - 1) < L) --elo;
  while (ehi + 1 <= hi && V(ehi + 1) < L) ++ehi;
  return {elo, ehi};
}

struct B1Segments {
  std::array<std::pair<i64, i64>, 2> seg;
  int count = 0;
};

// window minus exclusion, at most two segments
B1Segments subtract_exclusion(IRange w, IRange ex) {
  B1Segments out;
  if (w.empty()) return out;
  if (ex.empty() || ex.hi < w.lo || ex.lo > w.hi) {
    out.seg[out.count++] = {w.lo, w.hi};
    return out;
  }
  if (w.lo <= ex.lo - 1) out.seg[out.count++] = {w.lo, ex.lo - 1};
  if (ex.hi + 1 <= w.hi) out.seg[out.count++] = {ex.hi + 1, w.hi};
  return out;
}

B1Segments b1_segments(i64 bq, i64 c0, i128 L, i128 U, i64 lo, i64 hi) {
  QuadPoly V{static_cast<i128>(kCosDen), static_cast<i128>(bq), static_cast<i128>(c0)};
  IRange w = quad_le_window(V, U, lo, hi);
  if (w.empty()) return {};
  return subtract_exclusion(w, quad_lt_interval(V, L, w.lo, w.hi));
}

// Feasible-at-probe b2 range for a fixed b0: relaxing b1 to the reals,
// min over b1 of |B|^2 D^2 = (D^2-C1^2) b2^2 + 2 b0 (D C2 - C1^2) b2
//                            + (D^2-C1^2) b0^2  <= U D, and the b2 values
// whose box maximum over b1 (attained at an endpoint) stays below L are
// excluded.
B1Segments b2_segments(const Slice& s, std::size_t probe, i128 L, i128 U, i64 b0, i64 lo,
                       i64 hi) {
  const i128 D = kCosDen;
  const i128 C1 = s.grid.c1[probe], C2 = s.grid.c2[probe];
  const i128 alpha = D * D - C1 * C1;
  IRange w{lo, hi};
  if (alpha > 0 && U < kI128Sat) {
    QuadPoly vmin{alpha, 2 * b0 * (D * C2 - C1 * C1), alpha * b0 * b0};
    w = quad_le_window(vmin, U * D, lo, hi);
  }
  if (w.empty()) return {};
  auto endpoint_poly = [&](i64 b1) {
    return QuadPoly{D, 2 * (C1 * b1 + C2 * b0),
                    D * (b0 * b0 + b1 * b1) + 2 * C1 * b0 * b1};
  };
  IRange ex1 = quad_lt_interval(endpoint_poly(s.bbox[1].first), L, w.lo, w.hi);
  IRange ex = ex1;
  if (!ex.empty()) {
    IRange ex2 = quad_lt_interval(endpoint_poly(s.bbox[1].second), L, w.lo, w.hi);
    ex.lo = std::max(ex1.lo, ex2.lo);
    ex.hi = std::min(ex1.hi, ex2.hi);
  }
  return subtract_exclusion(w, ex);
}

// Per-a-pair window on b0 from the probe point's upper envelope: for fixed
// b0 the real minimum of |B|^2 over (b1, b2) is kappa b0^2 with
// kappa = (D^3 - 2 D C1^2 - D C2^2 + 2 C1^2 C2) / (D^2 - C1^2) >= 0,
// so |b0| beyond sqrt(U / kappa) cannot satisfy the point at all.
struct B0Window {
  bool reject_all = false;
  i64 max_abs = std::numeric_limits<i64>::max();
  bool rejects(i64 b0) const {
    return reject_all || b0 > max_abs || -b0 > max_abs;
  }
};

B0Window b0_window(const Slice& s, PairWork& wk, std::size_t probe) {
  B0Window win;
  wk.ensure(probe);
  if (wk.U[probe] < 0) {
    win.reject_all = true;
    return win;
  }
  if (wk.U[probe] >= kI128Sat) return win;
  const Int D(static_cast<long>(kCosDen));
  const Int C1(static_cast<long>(s.grid.c1[probe])), C2(static_cast<long>(s.grid.c2[probe]));
  Int det = D * D - C1 * C1;
  if (det <= 0) return win;
  Int kappa = D * D * D - 2 * D * C1 * C1 - D * C2 * C2 + 2 * C1 * C1 * C2;
  if (kappa <= 0) return win;
  Int q = floor_div(int_from_i128(wk.U[probe]) * det, kappa);
  if (q < 0) {
    win.reject_all = true;
    return win;
  }
  Int r;
  mpz_sqrt(r.get_mpz_t(), q.get_mpz_t());
  if (r.fits_slong_p()) win.max_abs = r.get_si();
  return win;
}

// For fixed b0, the box maximum of the convex form over (b1, b2) sits on a
// corner; when even that misses the probe point's lower envelope, no b
// completes this b0.
bool b0_corner_reaches_lower(const Slice& s, PairWork& wk, std::size_t probe, i64 b0) {
  if (wk.L[probe] <= 0) return true;
  i64 cmax = std::numeric_limits<i64>::min();
  for (int c = 0; c < 4; ++c) {
    cmax = std::max(cmax, quad_value(s.grid, probe, b0,
                                     (c & 1) ? s.bbox[1].second : s.bbox[1].first,
                                     (c & 2) ? s.bbox[2].second : s.bbox[2].first));
  }
  return static_cast<i128>(cmax) >= wk.L[probe];
}

// ----- slice scans ----------------------------------------------------------

struct ScanCounters {
  std::uint64_t checked = 0, feasible = 0, pruned = 0, skipped_cap = 0;
};

struct CostScanResult {
  Candidate best;
  ScanCounters counters;
  std::vector<QuantizedFilter> collected;
};

QuantizedFilter make_filter(const Slice& s, const APair& a, i64 b0, i64 b1, i64 b2) {
  QuantizedFilter q;
  q.a1 = a.a1;
  q.a2 = a.a2;
  q.b0 = b0;
  q.b1 = b1;
  q.b2 = b2;
  q.fmt_a = {s.w, a.g_a};
  q.fmt_b = {s.w, s.g_b};
  return q;
}

void scan_cost_worker(const Slice& s, const SolveOptions& opt, SharedState& shared,
                      std::size_t worker, std::size_t stride, CostScanResult& out) {
  PairWork wk;
  auto seq0 = magnitude_sequence(s.bbox[0].first, s.bbox[0].second);
  auto seq1 = magnitude_sequence(s.bbox[1].first, s.bbox[1].second);
  auto seq2 = magnitude_sequence(s.bbox[2].first, s.bbox[2].second);

  const i64 lo1 = s.bbox[1].first, hi1 = s.bbox[1].second;
  (void)seq1;
  (void)seq2;
  for (std::size_t ai = worker; ai < s.apairs.size(); ai += stride) {
    if (shared.expired()) return;
    APair apair = s.apairs[ai];
    if (!prepare_pair(s, apair, wk)) continue;
    const int nnza = (apair.a1 != 0) + (apair.a2 != 0);
    const std::size_t p0 = wk.order[0];
    const std::size_t p1 = s.npts > 1 ? wk.order[1] : p0;
    wk.ensure(p1);
    const B0Window b0win = b0_window(s, wk, p0);

    for (i64 b0 : seq0) {
      if (b0win.rejects(b0)) continue;
      if (!b0_corner_reaches_lower(s, wk, p0, b0)) continue;
      i64 lo2 = s.bbox[2].first, hi2 = s.bbox[2].second;
      if (s.sbc) {
        lo2 = std::max(lo2, -b0);
        hi2 = std::min(hi2, b0);
      }
      B1Segments segs2 = b2_segments(s, p0, wk.L[p0], wk.U[p0], b0, lo2, hi2);
      for (int sj = 0; sj < segs2.count; ++sj) {
      for (i64 b2 = segs2.seg[sj].first; b2 <= segs2.seg[sj].second; ++b2) {
        const bool even02 = s.dedupe_b && (b0 % 2 == 0) && (b2 % 2 == 0);
        const i64 base0 = b0 * b0 + b2 * b2;
        const i64 sum02 = b0 + b2;
        const i64 pb2 = 2 * b0 * b2;
        // b1 window: upper envelopes of the two leading probe points,
        // minus the region provably under the first probe's lower envelope
        QuadPoly v0{static_cast<i128>(kCosDen), 2 * sum02 * s.grid.c1[p0],
                    base0 * kCosDen + pb2 * s.grid.c2[p0]};
        IRange w = quad_le_window(v0, wk.U[p0], lo1, hi1);
        if (w.empty()) continue;
        QuadPoly v1{static_cast<i128>(kCosDen), 2 * sum02 * s.grid.c1[p1],
                    base0 * kCosDen + pb2 * s.grid.c2[p1]};
        w = quad_le_window(v1, wk.U[p1], w.lo, w.hi);
        if (w.empty()) continue;
        B1Segments segs = subtract_exclusion(w, quad_lt_interval(v0, wk.L[p0], w.lo, w.hi));
        for (int si = 0; si < segs.count; ++si) {
        for (i64 b1 = segs.seg[si].first; b1 <= segs.seg[si].second; ++b1) {
          if (b0 == 0 && b1 == 0 && b2 == 0) continue;
          if (even02 && b1 % 2 == 0) continue;  // same filter exists at g_b + 1
          ++out.counters.checked;
          if (!b_feasible(s, wk, base0 + b1 * b1, 2 * b1 * sum02, pb2)) continue;
          ++out.counters.feasible;
          if (opt.collect_feasible)
            out.collected.push_back(make_filter(s, apair, b0, b1, b2));

          const int nnzb = (b0 != 0) + (b1 != 0) + (b2 != 0);
          const int a_s = std::max(nnzb - 1, 0) + nnza;
          std::array<std::uint64_t, 3> funds_b{};
          std::size_t nf = 0;
          for (i64 v : {b0, b1, b2}) {
            auto f = odd_fundamental(v);
            if (f.odd > 1) funds_b[nf++] = f.odd;
          }
          std::sort(funds_b.begin(), funds_b.begin() + nf);
          nf = static_cast<std::size_t>(
              std::unique(funds_b.begin(), funds_b.begin() + nf) - funds_b.begin());
          const int lb = a_s + apair.lower_bound +
                         adder_lower_bound({funds_b.begin(), funds_b.begin() + nf});
          if (lb > shared.best_cost.load(std::memory_order_relaxed)) {
            ++out.counters.pruned;
            continue;
          }
          if (apair.cost < 0) {
            auto ca = mcm_cost({apair.a1, apair.a2}, {opt.mcm_cap, 0});
            apair.cost = ca ? *ca : -2;
          }
          auto cb = mcm_cost({b0, b1, b2}, {opt.mcm_cap, 0});
          if (apair.cost == -2 || !cb) {
            ++out.counters.skipped_cap;
            continue;
          }
          Candidate c;
          c.total = a_s + apair.cost + *cb;
          c.zeros = 5 - nnzb - nnza;
          c.magsum = std::llabs(b0) + std::llabs(b1) + std::llabs(b2) +
                     std::llabs(apair.a1) + std::llabs(apair.a2);
          c.q = make_filter(s, apair, b0, b1, b2);
          c.cost_a = apair.cost;
          c.cost_b = *cb;
          c.a_s = a_s;
          c.valid = true;
          if (c.better_than(out.best)) out.best = c;
          int cur = shared.best_cost.load(std::memory_order_relaxed);
          while (c.total < cur &&
                 !shared.best_cost.compare_exchange_weak(cur, c.total,
                                                         std::memory_order_relaxed)) {
          }
        }
        }
      }
      }
    }
  }
}

// Directional scan: exact min or max of one b coordinate over the feasible
// slice. dir_var in {0,1,2}; returns nullopt when the slice is infeasible.
struct DirScan {
  int var;
  bool minimize;
};

std::optional<i64> scan_direction(const Slice& s, SharedState& shared, const DirScan& dir,
                                  int threads) {
  std::atomic<i64> best{dir.minimize ? std::numeric_limits<i64>::max()
                                     : std::numeric_limits<i64>::min()};
  std::atomic<bool> found{false};

  auto run = [&](std::size_t worker, std::size_t stride) {
    PairWork wk;
    // iterate the extremized variable monotonically so clamping exits early
    auto seq_for = [&](int k) {
      std::vector<i64> seq;
      if (k == dir.var) {
        if (dir.minimize)
          for (i64 v = s.bbox[k].first; v <= s.bbox[k].second; ++v) seq.push_back(v);
        else
          for (i64 v = s.bbox[k].second; v >= s.bbox[k].first; --v) seq.push_back(v);
      } else {
        seq = magnitude_sequence(s.bbox[k].first, s.bbox[k].second);
      }
      return seq;
    };
    auto seq0 = seq_for(0), seq2 = seq_for(2);
    auto clamp_reached = [&](int k, i64 v) {
      if (k != dir.var) return false;
      i64 cur = best.load(std::memory_order_relaxed);
      return dir.minimize ? v >= cur : v <= cur;
    };
    std::vector<i64> b1_values, b2_values;
    for (std::size_t ai = worker; ai < s.apairs.size(); ai += stride) {
      if (shared.expired()) return;
      const APair& apair = s.apairs[ai];
      if (!prepare_pair(s, apair, wk)) continue;
      const std::size_t probe = wk.order[0];
      const B0Window b0win = b0_window(s, wk, probe);
      for (i64 b0 : seq0) {
        if (clamp_reached(0, b0)) break;
        if (b0win.rejects(b0)) continue;
        if (!b0_corner_reaches_lower(s, wk, probe, b0)) continue;
        bool done0 = false;
        i64 lo2 = s.bbox[2].first, hi2 = s.bbox[2].second;
        if (s.sbc) {
          lo2 = std::max(lo2, -b0);
          hi2 = std::min(hi2, b0);
        }
        B1Segments segs2 = b2_segments(s, probe, wk.L[probe], wk.U[probe], b0, lo2, hi2);
        b2_values.clear();
        for (int sj = 0; sj < segs2.count; ++sj)
          for (i64 v = segs2.seg[sj].first; v <= segs2.seg[sj].second; ++v)
            b2_values.push_back(v);
        if (dir.var == 2 && !dir.minimize) std::reverse(b2_values.begin(), b2_values.end());
        for (i64 b2 : b2_values) {
          if (clamp_reached(2, b2)) break;
          const bool even02 = s.dedupe_b && (b0 % 2 == 0) && (b2 % 2 == 0);
          const i64 base0 = b0 * b0 + b2 * b2;
          const i64 sum02 = b0 + b2;
          const i64 pb2 = 2 * b0 * b2;
          B1Segments segs =
              b1_segments(2 * sum02 * s.grid.c1[probe],
                          base0 * kCosDen + pb2 * s.grid.c2[probe], wk.L[probe],
                          wk.U[probe], s.bbox[1].first, s.bbox[1].second);
          b1_values.clear();
          for (int si = 0; si < segs.count; ++si)
            for (i64 v = segs.seg[si].first; v <= segs.seg[si].second; ++v)
              b1_values.push_back(v);
          if (dir.var == 1 && !dir.minimize) std::reverse(b1_values.begin(), b1_values.end());
          bool done2 = false;
          for (i64 b1 : b1_values) {
            if (clamp_reached(1, b1)) break;
            if (b0 == 0 && b1 == 0 && b2 == 0) continue;
            if (even02 && b1 % 2 == 0) continue;
            if (!b_feasible(s, wk, base0 + b1 * b1, 2 * b1 * sum02, pb2)) continue;
            found.store(true, std::memory_order_relaxed);
            const i64 vals[3] = {b0, b1, b2};
            i64 v = vals[dir.var];
            i64 cur = best.load(std::memory_order_relaxed);
            if (dir.minimize)
              while (v < cur && !best.compare_exchange_weak(cur, v)) {
              }
            else
              while (v > cur && !best.compare_exchange_weak(cur, v)) {
              }
            // the extremized coordinate cannot improve deeper in this nest
            if (dir.var == 1) break;
            if (dir.var == 2) {
              done2 = true;
              break;
            }
            done0 = true;
            break;
          }
          if (done2 || done0) break;
        }
        if (done0) break;
      }
    }
  };

  if (threads <= 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(run, static_cast<std::size_t>(t), static_cast<std::size_t>(threads));
    for (auto& th : pool) th.join();
  }
  if (!found.load()) return std::nullopt;
  return best.load();
}

std::array<std::pair<i64, i64>, 3> integer_bbox(const BBox& bounds, int w, int g_b, bool sbc) {
  std::array<std::pair<i64, i64>, 3> box;
  const i64 half = i64{1} << (w - 1);
  for (int k = 0; k < 3; ++k) {
    double scaled = std::ldexp(bounds.bound[k], -(g_b - w + 1));
    i64 m = scaled >= static_cast<double>(half) ? half
                                                : static_cast<i64>(std::floor(scaled));
    box[k] = {std::max(-half, -m), std::min(half - 1, m)};
  }
  if (sbc) box[0].first = std::max<i64>(box[0].first, 0);
  return box;
}

Slice make_slice(const DesignProblem& p, const BBox& bounds, int ga_lo, int ga_hi, int g_b,
                 bool dedupe_a = false, bool dedupe_b = false) {
  Slice s;
  s.w = p.w;
  s.g_b = g_b;
  s.sbc = p.options.use_sbc;
  s.dedupe_b = dedupe_b;
  s.bbox = integer_bbox(bounds, p.w, g_b, s.sbc);
  for (int g_a = ga_hi; g_a >= ga_lo; --g_a)
    append_stable_pairs(s.apairs, p.w, g_a, g_b, dedupe_a && g_a < ga_hi);
  s.grid = make_slice_grid(p.grid);
  s.npts = p.grid.points.size();
  return s;
}

bool spec_all_lower_bounds_zero(const FrequencySpec& spec) {
  for (const auto& band : spec.bands) {
    const auto& f = band.beta_lo;
    if (f.is_constant()) {
      if (f.constant != 0) return false;
    } else {
      for (const auto& v : f.values)
        if (v != 0) return false;
    }
  }
  return true;
}

}  // namespace

// ----- public surface --------------------------------------------------------

int structural_adders(const QuantizedFilter& q) {
  int nnzb = (q.b0 != 0) + (q.b1 != 0) + (q.b2 != 0);
  int nnza = (q.a1 != 0) + (q.a2 != 0);
  return std::max(nnzb - 1, 0) + nnza;
}

bool sbc_region(i64 b0, i64 b1, i64 b2) {
  (void)b1;
  return b0 >= (b2 < 0 ? -b2 : b2);
}

std::vector<std::array<i64, 3>> symmetric_orbit(i64 b0, i64 b1, i64 b2) {
  std::vector<std::array<i64, 3>> orbit{{b0, b1, b2}};
  for (std::array<i64, 3> cand : {std::array<i64, 3>{-b0, -b1, -b2},
                                  std::array<i64, 3>{b2, b1, b0},
                                  std::array<i64, 3>{-b2, -b1, -b0}}) {
    if (std::find(orbit.begin(), orbit.end(), cand) == orbit.end()) orbit.push_back(cand);
  }
  return orbit;
}

DesignProblem make_problem(const FrequencySpec& spec, int w, const SolveOptions& options) {
  DesignProblem p;
  p.spec = spec;
  p.spec.validate();
  p.grid = discretize(spec, options.points_per_band);
  p.w = w;
  p.options = options;
  return p;
}

std::optional<TightBox> tighten_bounds(const DesignProblem& problem, int g_a, int g_b) {
  BBox bounds = b_bounds(problem.spec, problem.grid);
  Slice s = make_slice(problem, bounds, g_a, g_a, g_b);
  SharedState shared;
  if (problem.options.time_limit_s > 0) {
    shared.has_deadline = true;
    shared.deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                         std::chrono::duration<double>(
                                             problem.options.time_limit_s));
  }
  int threads = resolve_threads(problem.options.threads);
  TightBox box;
  for (int k = 0; k < 3; ++k) {
    auto lo = scan_direction(s, shared, {k, true}, threads);
    if (!lo) return std::nullopt;
    auto hi = scan_direction(s, shared, {k, false}, threads);
    box.b[k] = {*lo, *hi};
  }
  return box;
}

DesignResult solve(const DesignProblem& problem) {
  if (problem.w < 2 || problem.w > 12)
    throw std::invalid_argument("solve: word length must be in [2, 12]");
  if (problem.grid.points.empty()) throw std::invalid_argument("solve: empty grid");
  auto t0 = Clock::now();

  DesignResult result;
  if (spec_all_lower_bounds_zero(problem.spec)) {
    // the all-zero filter satisfies upper bounds trivially and costs nothing
    result.status = SolveStatus::Optimal;
    result.filter = QuantizedFilter{0, 0, 0, 0, 0, {problem.w, 1}, {problem.w, 0}};
    result.zero_coefficient = {true, true, true, true, true};
    return result;
  }

  BBox bounds = b_bounds(problem.spec, problem.grid);
  auto [gb_lo, gb_hi] = problem.options.g_b_range.value_or(
      std::make_pair(bounds.g_b - 2, bounds.g_b));
  auto [ga_lo, ga_hi] = problem.options.g_a_range.value_or(
      std::make_pair(a_bounds().g_a - 2, a_bounds().g_a));
  ga_hi = std::min(ga_hi, problem.w - 1);
  ga_lo = std::max(std::min(ga_lo, ga_hi), problem.w - 15);  // keeps |A|^2 in int64

  SharedState shared;
  if (problem.options.time_limit_s > 0) {
    shared.has_deadline = true;
    shared.deadline = t0 + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double>(problem.options.time_limit_s));
  }
  const int threads = resolve_threads(problem.options.threads);

  std::vector<Candidate> finalists;
  ScanCounters totals;
  std::vector<QuantizedFilter> collected;
  std::uint64_t a_pairs = 0;

  // seed incumbent (wordlength sweeps pass the previous optimum, rescaled)
  if (problem.options.seed) {
    const QuantizedFilter& q = *problem.options.seed;
    auto rc = q.to_real();
    if (q.valid() && q.fmt_a.w == problem.w && q.fmt_b.w == problem.w &&
        is_stable(rc.a1, rc.a2) && !satisfies_grid(q, problem.grid)) {
      auto ca = mcm_cost({q.a1, q.a2}, {problem.options.mcm_cap, 0});
      auto cb = mcm_cost({q.b0, q.b1, q.b2}, {problem.options.mcm_cap, 0});
      if (ca && cb) {
        Candidate c;
        c.a_s = structural_adders(q);
        c.cost_a = *ca;
        c.cost_b = *cb;
        c.total = c.a_s + *ca + *cb;
        c.zeros = static_cast<int>((q.b0 == 0) + (q.b1 == 0) + (q.b2 == 0) + (q.a1 == 0) +
                                   (q.a2 == 0));
        c.magsum = std::llabs(q.b0) + std::llabs(q.b1) + std::llabs(q.b2) +
                   std::llabs(q.a1) + std::llabs(q.a2);
        c.q = q;
        c.valid = true;
        finalists.push_back(c);
        shared.best_cost.store(c.total);
      }
    }
  }

  for (int g_b = gb_hi; g_b >= gb_lo; --g_b) {
    if (shared.expired()) break;
    const bool dedupe = !problem.options.collect_feasible;
    Slice s = make_slice(problem, bounds, ga_lo, ga_hi, g_b, dedupe, dedupe && g_b < gb_hi);
    a_pairs += s.apairs.size();

    const bool debug_stats = std::getenv("IIRFORGE_DEBUG_STATS") != nullptr;
    auto slice_t0 = Clock::now();
    // directional tightening pays off once the crude box gets large
    std::uint64_t volume = 1;
    for (auto [lo, hi] : s.bbox) volume *= static_cast<std::uint64_t>(hi - lo + 1);
    if (volume > (std::getenv("IIRFORGE_NO_TIGHTEN") ? ~0ULL : 20000ULL) && !problem.options.collect_feasible) {
      TightBox tb;
      bool feasible = true;
      for (int k = 0; k < 3 && feasible; ++k) {
        auto lo = scan_direction(s, shared, {k, true}, threads);
        std::optional<i64> hi =
            lo ? scan_direction(s, shared, {k, false}, threads) : std::optional<i64>{};
        if (!lo || !hi) {
          feasible = false;
          break;
        }
        tb.b[k] = {*lo, *hi};
      }
      if (!feasible) {
        if (shared.expired()) break;
        continue;
      }
      for (int k = 0; k < 3; ++k) s.bbox[k] = tb.b[k];
    }
    auto tighten_t = std::chrono::duration<double>(Clock::now() - slice_t0).count();

    std::vector<CostScanResult> results(static_cast<std::size_t>(threads));
    if (threads <= 1) {
      scan_cost_worker(s, problem.options, shared, 0, 1, results[0]);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t)
        pool.emplace_back(scan_cost_worker, std::cref(s), std::cref(problem.options),
                          std::ref(shared), static_cast<std::size_t>(t),
                          static_cast<std::size_t>(threads), std::ref(results[t]));
      for (auto& th : pool) th.join();
    }
    std::uint64_t slice_checked = 0;
    for (auto& r : results) {
      totals.checked += r.counters.checked;
      totals.feasible += r.counters.feasible;
      totals.pruned += r.counters.pruned;
      totals.skipped_cap += r.counters.skipped_cap;
      slice_checked += r.counters.checked;
      if (r.best.valid) finalists.push_back(r.best);
      collected.insert(collected.end(), r.collected.begin(), r.collected.end());
    }
    if (debug_stats) {
      double total_t = std::chrono::duration<double>(Clock::now() - slice_t0).count();
      fprintf(stderr,
              "[slice g_b=%d] pairs=%zu box=[%lld..%lld][%lld..%lld][%lld..%lld] "
              "tighten=%.2fs scan=%.2fs checked=%llu\n",
              g_b, s.apairs.size(), static_cast<long long>(s.bbox[0].first),
              static_cast<long long>(s.bbox[0].second),
              static_cast<long long>(s.bbox[1].first),
              static_cast<long long>(s.bbox[1].second),
              static_cast<long long>(s.bbox[2].first),
              static_cast<long long>(s.bbox[2].second), tighten_t, total_t - tighten_t,
              static_cast<unsigned long long>(slice_checked));
    }
  }

  result.a_pairs_enumerated = a_pairs;
  result.candidates_checked = totals.checked;
  result.candidates_feasible = totals.feasible;
  result.candidates_cost_pruned = totals.pruned;
  result.feasible_set = std::move(collected);

  Candidate best;
  for (const auto& c : finalists)
    if (c.better_than(best)) best = c;

  if (!best.valid) {
    result.status = shared.timed_out.load() ? SolveStatus::TimedOut : SolveStatus::Infeasible;
  } else {
    result.status = shared.timed_out.load() ? SolveStatus::TimedOut : SolveStatus::Optimal;
    result.filter = best.q;
    result.adders_structural = best.a_s;
    result.adders_mult_a = best.cost_a;
    result.adders_mult_b = best.cost_b;
    result.adders_mult = best.cost_a + best.cost_b;
    result.adders_total = best.total;
    result.zero_coefficient = {best.q.b0 == 0, best.q.b1 == 0, best.q.b2 == 0,
                               best.q.a1 == 0, best.q.a2 == 0};
    auto ga = solve_mcm({best.q.a1, best.q.a2}, {problem.options.mcm_cap, 0});
    auto gb = solve_mcm({best.q.b0, best.q.b1, best.q.b2}, {problem.options.mcm_cap, 0});
    result.graph_a = ga ? *ga : AdderGraph{};
    result.graph_b = gb ? *gb : AdderGraph{};
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

DesignResult design_with_verification(DesignProblem& problem, double verify_step) {
  constexpr int kMaxIterations = 25;
  DesignResult result;
  std::vector<double> appended;
  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    result = solve(problem);
    result.verify_iterations = iter;
    result.appended_frequencies = appended;
    if (result.status != SolveStatus::Optimal) return result;
    auto cex = verify_spec(result.filter, problem.spec, verify_step);
    if (!cex) {
      result.verified = true;
      return result;
    }
    std::size_t before = problem.grid.points.size();
    append_frequency(problem.grid, cex->omega, problem.spec);
    if (problem.grid.points.size() == before) {
      // frequency already present: the margin is too tight to certify, stop
      result.verified = false;
      return result;
    }
    appended.push_back(cex->omega.get_d());
  }
  result.verified = false;
  return result;
}

std::vector<SweepRow> wordlength_sweep(const FrequencySpec& spec, int w_lo, int w_hi,
                                       const SolveOptions& options) {
  if (w_lo > w_hi) throw std::invalid_argument("wordlength_sweep: empty range");
  std::vector<SweepRow> rows;
  std::optional<QuantizedFilter> seed;
  for (int w = w_lo; w <= w_hi; ++w) {
    SolveOptions opt = options;
    opt.seed = seed;
    DesignProblem p = make_problem(spec, w, opt);
    SweepRow row{w, solve(p)};
    if (row.result.status == SolveStatus::Optimal) {
      QuantizedFilter q = row.result.filter;
      q.a1 *= 2;
      q.a2 *= 2;
      q.b0 *= 2;
      q.b1 *= 2;
      q.b2 *= 2;
      q.fmt_a.w = w + 1;
      q.fmt_b.w = w + 1;
      seed = q;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace iirforge
