#include "iirforge/mcm.hpp"

#include <algorithm>
#include <bit>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace iirforge {

OddFundamental odd_fundamental(std::int64_t c) {
  if (c == 0) return {0, 0, 1};
  OddFundamental f;
  f.sign = c < 0 ? -1 : 1;
  std::uint64_t v = static_cast<std::uint64_t>(c < 0 ? -c : c);
  f.shift = std::countr_zero(v);
  f.odd = v >> f.shift;
  return f;
}

int csd_nonzero_digits(std::uint64_t v) {
  // standard identity: CSD weight of v = popcount(v ^ 3v) adjusted, computed
  // via the carry form: nonzeros = popcount((v + (v << 1)) ^ (v << 1) ... )
  // use the direct recoding instead, it is clearer
  int count = 0;
  while (v) {
    if (v & 1) {
      // choose digit +1 or -1 so the remainder is divisible by 4
      if ((v & 3) == 3)
        v += 1;  // digit -1
      else
        v -= 1;  // digit +1
      ++count;
    }
    v >>= 1;
  }
  return count;
}

int adder_lower_bound(const std::vector<std::uint64_t>& fundamentals) {
  int lb = static_cast<int>(fundamentals.size());
  for (std::uint64_t t : fundamentals) {
    int d = csd_nonzero_digits(t);
    int need = 0;
    while ((1 << need) < d) ++need;
    lb = std::max(lb, need);
  }
  return lb;
}

namespace {

constexpr std::uint64_t kMaxTargetMagnitude = std::uint64_t{1} << 24;

std::uint64_t normalize_odd(std::uint64_t v) {
  if (v == 0) return 0;
  return v >> std::countr_zero(v);
}

struct BuildStep {
  std::uint64_t value, left_value, right_value;
  int left_shift, right_shift, right_sign;
};

// One add/sub of two available values with free shifts, normalized odd.
// visit(value, step) for every synthesizable value <= max_value.
template <typename F>
void for_each_combination(const std::vector<std::uint64_t>& avail, std::uint64_t max_value,
                          F&& visit) {
  int max_bits = 64 - std::countl_zero(max_value);
  for (std::uint64_t x : avail) {
    for (std::uint64_t y : avail) {
      // x << s  +/-  y
      for (int s = 0; (x << s) <= (max_value << 1) && s <= max_bits + 1; ++s) {
        std::uint64_t xs = x << s;
        std::uint64_t sum = xs + y;
        std::uint64_t v = normalize_odd(sum);
        if (v > 1 && v <= max_value) visit(v, BuildStep{v, x, y, s, 0, +1});
        std::uint64_t diff = xs > y ? xs - y : y - xs;
        v = normalize_odd(diff);
        if (v > 1 && v <= max_value) visit(v, BuildStep{v, x, y, s, 0, -1});
      }
      // x  +/-  y << s  (s = 0 covered above)
      for (int s = 1; (y << s) <= (max_value << 1) && s <= max_bits + 1; ++s) {
        std::uint64_t ys = y << s;
        std::uint64_t v = normalize_odd(x + ys);
        if (v > 1 && v <= max_value) visit(v, BuildStep{v, x, y, 0, s, +1});
        std::uint64_t diff = x > ys ? x - ys : ys - x;
        v = normalize_odd(diff);
        if (v > 1 && v <= max_value) visit(v, BuildStep{v, x, y, 0, s, -1});
      }
    }
  }
}

struct Searcher {
  std::uint64_t max_value;
  std::vector<std::uint64_t> targets;  // odd fundamentals > 1, sorted
  std::vector<std::uint64_t> avail{1};
  std::vector<BuildStep> steps;
  std::vector<BuildStep> solution;
  // failed states per deepening round, keyed by the canonical (sorted) set;
  // value is the largest depth_left already proven fruitless
  std::unordered_map<std::string, int> failed;

  bool is_target(std::uint64_t v) const {
    return std::binary_search(targets.begin(), targets.end(), v);
  }

  int unreached() const {
    int n = 0;
    for (std::uint64_t t : targets)
      if (std::find(avail.begin(), avail.end(), t) == avail.end()) ++n;
    return n;
  }

  std::string canonical_key() const {
    std::vector<std::uint64_t> sorted(avail);
    std::sort(sorted.begin(), sorted.end());
    std::string k;
    for (auto v : sorted) {
      k += std::to_string(v);
      k += ',';
    }
    return k;
  }

  bool dfs(int depth_left) {
    int miss = unreached();
    if (miss == 0) {
      solution = steps;
      return true;
    }
    if (miss > depth_left) return false;
    std::string key = canonical_key();
    auto seen = failed.find(key);
    if (seen != failed.end() && seen->second >= depth_left) return false;

    // gather candidate next values; when every remaining adder must produce a
    // target, restrict to targets
    bool targets_only = (miss == depth_left);
    std::vector<std::pair<std::uint64_t, BuildStep>> cands;
    for_each_combination(avail, max_value, [&](std::uint64_t v, const BuildStep& st) {
      if (std::find(avail.begin(), avail.end(), v) != avail.end()) return;
      if (targets_only && !is_target(v)) return;
      for (const auto& c : cands)
        if (c.first == v) return;
      cands.emplace_back(v, st);
    });
    // targets first, then ascending value: finds cheap completions early
    std::stable_sort(cands.begin(), cands.end(), [&](const auto& a, const auto& b) {
      bool ta = is_target(a.first), tb = is_target(b.first);
      if (ta != tb) return ta;
      return a.first < b.first;
    });
    for (const auto& [v, st] : cands) {
      avail.push_back(v);
      steps.push_back(st);
      if (dfs(depth_left - 1)) return true;
      steps.pop_back();
      avail.pop_back();
    }
    auto [it, inserted] = failed.emplace(key, depth_left);
    if (!inserted && it->second < depth_left) it->second = depth_left;
    return false;
  }
};

AdderGraph graph_from_steps(const std::vector<BuildStep>& steps,
                            const std::vector<std::int64_t>& requested) {
  AdderGraph g;
  auto index_of = [&](std::uint64_t value) -> int {
    if (value == 1) return AdderGraph::kInput;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      if (g.nodes[i].value == value) return static_cast<int>(i);
    throw std::logic_error("mcm: dangling value in build steps");
  };
  for (const auto& st : steps) {
    AdderGraph::Node n;
    n.left = index_of(st.left_value);
    n.right = index_of(st.right_value);
    n.value = st.value;
    n.left_shift = st.left_shift;
    n.right_shift = st.right_shift;
    n.right_sign = st.right_sign;
    g.nodes.push_back(n);
  }
  for (std::int64_t c : requested) {
    OddFundamental f = odd_fundamental(c);
    if (f.odd == 0) continue;
    AdderGraph::Target t;
    t.constant = c;
    t.node = f.odd == 1 ? AdderGraph::kInput : index_of(f.odd);
    t.output_shift = f.shift;
    t.sign = f.sign;
    g.targets.push_back(t);
  }
  return g;
}

struct CostCache {
  std::mutex mu;
  std::unordered_map<std::string, int> min_adders;
};

CostCache& cost_cache() {
  static CostCache cache;
  return cache;
}

std::string cache_key(const std::vector<std::uint64_t>& funds, const McmOptions& opt) {
  std::ostringstream os;
  os << opt.max_bits_slack << ':';
  for (auto f : funds) os << f << ',';
  return os.str();
}

std::vector<std::uint64_t> fundamental_set(const std::vector<std::int64_t>& targets) {
  std::vector<std::uint64_t> funds;
  for (std::int64_t c : targets) {
    if (static_cast<std::uint64_t>(c < 0 ? -c : c) > kMaxTargetMagnitude)
      throw std::invalid_argument("solve_mcm: target magnitude over 2^24");
    OddFundamental f = odd_fundamental(c);
    if (f.odd > 1) funds.push_back(f.odd);
  }
  std::sort(funds.begin(), funds.end());
  funds.erase(std::unique(funds.begin(), funds.end()), funds.end());
  return funds;
}

std::optional<Searcher> run_search(const std::vector<std::uint64_t>& funds,
                                   const McmOptions& opt) {
  Searcher s;
  s.targets = funds;
  std::uint64_t maxt = funds.empty() ? 1 : funds.back();
  int bits = 64 - std::countl_zero(maxt);
  s.max_value = (std::uint64_t{1} << (bits + 1 + opt.max_bits_slack)) - 1;
  for (int budget = adder_lower_bound(funds); budget <= opt.cap; ++budget) {
    s.avail = {1};
    s.steps.clear();
    s.failed.clear();
    if (s.dfs(budget)) return s;
  }
  return std::nullopt;
}

}  // namespace

bool AdderGraph::validate() const {
  auto value_of = [&](int idx) -> std::uint64_t {
    if (idx == kInput) return 1;
    return nodes[static_cast<std::size_t>(idx)].value;
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    if (n.left >= static_cast<int>(i) || n.right >= static_cast<int>(i)) return false;
    if (n.value == 0 || (n.value & 1) == 0) return false;
    if (n.left_shift != 0 && n.right_shift != 0) return false;
    __int128 lv = static_cast<__int128>(value_of(n.left)) << n.left_shift;
    __int128 rv = static_cast<__int128>(value_of(n.right)) << n.right_shift;
    __int128 raw = lv + (n.right_sign < 0 ? -rv : rv);
    if (raw < 0) raw = -raw;
    std::uint64_t norm = normalize_odd(static_cast<std::uint64_t>(raw));
    if (norm != n.value) return false;
  }
  for (const Target& t : targets) {
    std::uint64_t mag = static_cast<std::uint64_t>(t.constant < 0 ? -t.constant : t.constant);
    if (value_of(t.node) << t.output_shift != mag) return false;
    if ((t.constant < 0 ? -1 : 1) != t.sign) return false;
  }
  return true;
}

std::optional<int> mcm_cost(const std::vector<std::int64_t>& targets, const McmOptions& opt) {
  auto funds = fundamental_set(targets);
  if (funds.empty()) return 0;
  std::string key = cache_key(funds, opt);
  {
    std::lock_guard<std::mutex> lock(cost_cache().mu);
    auto it = cost_cache().min_adders.find(key);
    if (it != cost_cache().min_adders.end()) {
      if (it->second > opt.cap) return std::nullopt;
      return it->second;
    }
  }
  auto s = run_search(funds, opt);
  if (!s) return std::nullopt;  // cap-dependent, so never cached
  int result = static_cast<int>(s->solution.size());
  {
    std::lock_guard<std::mutex> lock(cost_cache().mu);
    cost_cache().min_adders.emplace(key, result);
  }
  return result;
}

std::optional<AdderGraph> solve_mcm(const std::vector<std::int64_t>& targets,
                                    const McmOptions& opt) {
  auto funds = fundamental_set(targets);
  if (funds.empty()) return graph_from_steps({}, targets);
  auto s = run_search(funds, opt);
  if (!s) return std::nullopt;
  {
    std::lock_guard<std::mutex> lock(cost_cache().mu);
    cost_cache().min_adders.emplace(cache_key(funds, opt),
                                    static_cast<int>(s->solution.size()));
  }
  return graph_from_steps(s->solution, targets);
}

std::string emit_dot(const AdderGraph& graph, const std::string& name) {
  std::ostringstream os;
  os << "digraph " << name << " {\n  rankdir=TB;\n";
  os << "  input [label=\"1\", shape=box];\n";
  auto ref = [](int idx) {
    return idx == AdderGraph::kInput ? std::string("input") : "n" + std::to_string(idx);
  };
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& n = graph.nodes[i];
    os << "  n" << i << " [label=\"" << n.value << "\"];\n";
    os << "  " << ref(n.left) << " -> n" << i << " [label=\"<<" << n.left_shift << "\"];\n";
    os << "  " << ref(n.right) << " -> n" << i << " [label=\""
       << (n.right_sign < 0 ? "-" : "+") << "<<" << n.right_shift << "\"];\n";
  }
  for (std::size_t i = 0; i < graph.targets.size(); ++i) {
    const auto& t = graph.targets[i];
    os << "  t" << i << " [label=\"" << t.constant << "\", shape=doublecircle];\n";
    os << "  " << ref(t.node) << " -> t" << i << " [label=\"" << (t.sign < 0 ? "-" : "")
       << "<<" << t.output_shift << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace iirforge
