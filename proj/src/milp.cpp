#include "iirforge/milp.hpp"

#include <algorithm>
#include <sstream>

namespace iirforge {

namespace {

Rat var_abs_bound(const LinearModel::Variable& v) {
  Rat lo = v.lower < 0 ? Rat(-v.lower) : v.lower;
  Rat hi = v.upper < 0 ? Rat(-v.upper) : v.upper;
  Rat m = std::max(lo, hi);
  return m < 1 ? Rat(1) : m;
}

int bits_for(const Rat& xbar) {
  // paper's index bound: i = 0 .. ceil(log2 xbar) + 1
  int c = 0;
  Rat p = 1;
  while (p < xbar) {
    p *= 2;
    ++c;
  }
  return c + 2;
}

std::string num(const Rat& q) {
  auto s = rat_to_decimal(q);
  if (!s) throw ModelExportError("coefficient without finite decimal expansion");
  return *s;
}

}  // namespace

int LinearModel::add_variable(const std::string& name, VarKind kind, const Rat& lo,
                              const Rat& hi) {
  variables.push_back({name, kind, lo, hi});
  return static_cast<int>(variables.size() - 1);
}

int LinearModel::find_variable(const std::string& name) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<int> binary_expansion(LinearModel& model, int x) {
  const auto& xv = model.variables[static_cast<std::size_t>(x)];
  if (xv.lower < 0) throw std::invalid_argument("binary_expansion: variable must be nonnegative");
  Rat xbar = xv.upper;
  if (xbar < 1) xbar = 1;
  int nbits = bits_for(xbar);
  std::vector<int> bits;
  LinearModel::Constraint link;
  link.name = "bits_" + xv.name;
  link.relation = Relation::Eq;
  link.rhs = 0;
  link.terms.push_back({x, 1});
  for (int i = 0; i < nbits; ++i) {
    int t = model.add_variable("t_" + xv.name + "_" + std::to_string(i), VarKind::Binary, 0, 1);
    bits.push_back(t);
    link.terms.push_back({t, -pow2(i)});
  }
  model.constraints.push_back(std::move(link));
  return bits;
}

namespace {

// abs/sign split of a signed variable, created once per variable
struct AbsSign {
  int abs_var, sign_var;
};

AbsSign ensure_abs(LinearModel& m, int x) {
  const std::string base = m.variables[static_cast<std::size_t>(x)].name;
  int existing = m.find_variable(base + "_abs");
  if (existing >= 0) return {existing, m.find_variable(base + "_sg")};
  Rat xbar = var_abs_bound(m.variables[static_cast<std::size_t>(x)]);
  int xa = m.add_variable(base + "_abs", VarKind::Integer, 0, xbar);
  int xs = m.add_variable(base + "_sg", VarKind::Binary, 0, 1);
  Rat m2 = 2 * xbar;
  auto add = [&](const std::string& n, std::vector<LinearModel::Term> t, Relation r, Rat rhs) {
    m.constraints.push_back({n, std::move(t), r, std::move(rhs)});
  };
  add("abs1_" + base, {{xa, 1}, {x, -1}}, Relation::Ge, 0);
  add("abs2_" + base, {{xa, 1}, {x, 1}}, Relation::Ge, 0);
  add("abs3_" + base, {{xa, 1}, {x, -1}, {xs, -m2}}, Relation::Le, 0);
  add("abs4_" + base, {{xa, 1}, {x, 1}, {xs, m2}}, Relation::Le, m2);
  m.big_m_audit.push_back({"abs3_" + base, m2});
  m.big_m_audit.push_back({"abs4_" + base, m2});
  return {xa, xs};
}

}  // namespace

int signed_product(LinearModel& model, int x, int y) {
  const std::string xn = model.variables[static_cast<std::size_t>(x)].name;
  const std::string yn = model.variables[static_cast<std::size_t>(y)].name;
  const std::string tag = xn + "_" + yn;
  int existing = model.find_variable("z_" + tag);
  if (existing >= 0) return existing;

  AbsSign xa = ensure_abs(model, x);
  AbsSign ya = (y == x) ? xa : ensure_abs(model, y);
  Rat xbar = var_abs_bound(model.variables[static_cast<std::size_t>(x)]);
  Rat ybar = var_abs_bound(model.variables[static_cast<std::size_t>(y)]);
  Rat M = xbar * ybar;

  // bits of |x| are shared between all products involving x
  std::vector<int> bits;
  int probe = model.find_variable("t_" + xn + "_abs_0");
  if (probe >= 0) {
    for (int i = 0; probe >= 0; probe = model.find_variable("t_" + xn + "_abs_" +
                                                            std::to_string(++i)))
      bits.push_back(probe);
  } else {
    bits = binary_expansion(model, xa.abs_var);
  }

  auto add = [&](const std::string& n, std::vector<LinearModel::Term> t, Relation r, Rat rhs) {
    model.constraints.push_back({n, std::move(t), r, std::move(rhs)});
  };

  // z_plus = |x| |y| via per-bit big-M products u_i = t_i * |y|
  int zp = model.add_variable("zp_" + tag, VarKind::Integer, 0, M);
  LinearModel::Constraint sum;
  sum.name = "prod_" + tag;
  sum.relation = Relation::Eq;
  sum.rhs = 0;
  sum.terms.push_back({zp, 1});
  for (std::size_t i = 0; i < bits.size(); ++i) {
    int u = model.add_variable("u_" + tag + "_" + std::to_string(i), VarKind::Integer, 0, ybar);
    std::string si = std::to_string(i);
    add("ub1_" + tag + "_" + si, {{u, 1}, {bits[i], -ybar}}, Relation::Le, 0);
    add("ub2_" + tag + "_" + si, {{u, 1}, {ya.abs_var, -1}}, Relation::Le, 0);
    add("ub3_" + tag + "_" + si, {{u, 1}, {ya.abs_var, -1}, {bits[i], -ybar}}, Relation::Ge,
        -ybar);
    model.big_m_audit.push_back({"ub1_" + tag + "_" + si, ybar});
    model.big_m_audit.push_back({"ub3_" + tag + "_" + si, ybar});
    sum.terms.push_back({u, -pow2(static_cast<int>(i))});
  }
  model.constraints.push_back(std::move(sum));

  // sign selection: s = x_sg xor y_sg, z = (1 - 2 s) z_plus
  int z = model.add_variable("z_" + tag, VarKind::Integer, -M, M);
  if (x == y) {
    add("zsq_" + tag, {{z, 1}, {zp, -1}}, Relation::Eq, 0);
    return z;
  }
  int q = model.add_variable("q_" + tag, VarKind::Binary, 0, 1);
  int sx = model.add_variable("s_" + tag, VarKind::Binary, 0, 1);
  add("and1_" + tag, {{q, 1}, {xa.sign_var, -1}}, Relation::Le, 0);
  add("and2_" + tag, {{q, 1}, {ya.sign_var, -1}}, Relation::Le, 0);
  add("and3_" + tag, {{q, 1}, {xa.sign_var, -1}, {ya.sign_var, -1}}, Relation::Ge, -1);
  add("xor_" + tag, {{sx, 1}, {xa.sign_var, -1}, {ya.sign_var, -1}, {q, 2}}, Relation::Eq, 0);
  Rat m2 = 2 * M;
  add("zs1_" + tag, {{z, 1}, {zp, -1}}, Relation::Le, 0);
  add("zs2_" + tag, {{z, 1}, {zp, 1}}, Relation::Ge, 0);
  add("zs3_" + tag, {{z, 1}, {zp, -1}, {sx, m2}}, Relation::Ge, 0);
  add("zs4_" + tag, {{z, 1}, {zp, 1}, {sx, m2}}, Relation::Le, m2);
  model.big_m_audit.push_back({"zs3_" + tag, m2});
  model.big_m_audit.push_back({"zs4_" + tag, m2});
  return z;
}

LinearModel build_design_model(const DesignProblem& problem, const ModelBoxes& boxes,
                               ModelMode mode) {
  if (problem.grid.points.empty())
    throw std::invalid_argument("build_design_model: empty grid");
  LinearModel m;
  const int w = problem.w;
  const int g_a = boxes.g_a, g_b = boxes.g_b;
  const Int unit = Int(1) << (w - 1 - g_a);  // integer value of a0 = 1
  const Int half = Int(1) << (w - 1);

  {
    std::ostringstream os;
    os << "iirforge design model: spec=" << problem.spec.name << " w=" << w << " g_a=" << g_a
       << " g_b=" << g_b << " grid=" << problem.grid.points.size() << " sbc="
       << (problem.options.use_sbc ? 1 : 0);
    m.header_comments.push_back(os.str());
    m.header_comments.push_back(
        "multiplier-block (MCM) constraints intentionally omitted from this export;"
        " the file covers the filter-design portion plus zero-coefficient glue");
  }

  // integer-strict stability: |a1'| <= 2 unit - 1, a2' <= unit - 1,
  // a2' - |a1'| >= 1 - unit
  Rat a1_lim = std::min(Rat(Int(half - 1)), Rat(Int(2 * unit - 1)));
  int a1 = m.add_variable("a1", VarKind::Integer, -a1_lim, a1_lim);
  int a2 = m.add_variable("a2", VarKind::Integer, Rat(Int(-half)),
                          std::min(Rat(Int(half - 1)), Rat(Int(unit - 1))));
  int b0 = m.add_variable("b0", VarKind::Integer, Rat(static_cast<long>(boxes.b[0].first)),
                          Rat(static_cast<long>(boxes.b[0].second)));
  int b1 = m.add_variable("b1", VarKind::Integer, Rat(static_cast<long>(boxes.b[1].first)),
                          Rat(static_cast<long>(boxes.b[1].second)));
  int b2 = m.add_variable("b2", VarKind::Integer, Rat(static_cast<long>(boxes.b[2].first)),
                          Rat(static_cast<long>(boxes.b[2].second)));

  AbsSign a1a = ensure_abs(m, a1);
  m.constraints.push_back({"stability",
                           {{a2, 1}, {a1a.abs_var, -1}},
                           Relation::Ge,
                           Rat(Int(1 - unit))});

  // bilinear products
  int zb00 = signed_product(m, b0, b0);
  int zb11 = signed_product(m, b1, b1);
  int zb22 = signed_product(m, b2, b2);
  int zb01 = signed_product(m, b0, b1);
  int zb12 = signed_product(m, b1, b2);
  int zb02 = signed_product(m, b0, b2);
  int za11 = signed_product(m, a1, a1);
  int za22 = signed_product(m, a2, a2);
  int za12 = signed_product(m, a1, a2);

  // per-grid-point squared-magnitude constraints with canonical cosines
  const Rat sb2 = pow2(2 * (g_b - w + 1));
  const Rat sa2 = pow2(2 * (g_a - w + 1));
  const Rat a0c = Rat(unit);
  for (std::size_t i = 0; i < problem.grid.points.size(); ++i) {
    const auto& p = problem.grid.points[i];
    Rat c1 = Rat(static_cast<long>(p.c1), static_cast<long>(kCosDen));
    Rat c2 = Rat(static_cast<long>(p.c2), static_cast<long>(kCosDen));
    c1.canonicalize();
    c2.canonicalize();
    for (int side = 0; side < 2; ++side) {
      const Rat& beta_sq = side == 0 ? p.beta_lo_sq : p.beta_hi_sq;
      Rat sgn = side == 0 ? 1 : -1;  // side 0: B^2 - beta^2 A^2 >= 0, side 1: <= 0 flipped
      LinearModel::Constraint c;
      c.name = (side == 0 ? "freq_lo_" : "freq_hi_") + std::to_string(i);
      c.relation = Relation::Ge;
      Rat k = beta_sq * sa2 * sgn;
      c.terms.push_back({zb00, sb2 * sgn});
      c.terms.push_back({zb11, sb2 * sgn});
      c.terms.push_back({zb22, sb2 * sgn});
      c.terms.push_back({zb01, 2 * c1 * sb2 * sgn});
      c.terms.push_back({zb12, 2 * c1 * sb2 * sgn});
      c.terms.push_back({zb02, 2 * c2 * sb2 * sgn});
      c.terms.push_back({za11, -k});
      c.terms.push_back({za22, -k});
      c.terms.push_back({za12, -2 * c1 * k});
      c.terms.push_back({a1, -2 * c1 * a0c * k});
      c.terms.push_back({a2, -2 * c2 * a0c * k});
      c.rhs = k * a0c * a0c;  // constant a0^2 term moved to the rhs
      m.constraints.push_back(std::move(c));
    }
  }

  if (problem.options.use_sbc) {
    AbsSign b2a = ensure_abs(m, b2);
    m.constraints.push_back({"sbc", {{b0, 1}, {b2a.abs_var, -1}}, Relation::Ge, 0});
  }

  // zero-coefficient glue: zeta = 1 <=> coefficient = 0
  std::vector<int> zetas;
  for (int v : {b0, b1, b2, a1, a2}) {
    AbsSign va = ensure_abs(m, v);
    const std::string base = m.variables[static_cast<std::size_t>(v)].name;
    Rat vbar = var_abs_bound(m.variables[static_cast<std::size_t>(v)]);
    int zeta = m.add_variable("zeta_" + base, VarKind::Binary, 0, 1);
    zetas.push_back(zeta);
    m.constraints.push_back(
        {"glue1_" + base, {{va.abs_var, 1}, {zeta, vbar}}, Relation::Le, vbar});
    m.constraints.push_back({"glue2_" + base, {{zeta, 1}, {va.abs_var, 1}}, Relation::Ge, 1});
    m.big_m_audit.push_back({"glue1_" + base, vbar});
  }

  switch (mode) {
    case ModelMode::Feasibility:
      break;
    case ModelMode::MinB0:
      m.objective = {{b0, 1}};
      break;
    case ModelMode::MaxB0:
      m.objective = {{b0, 1}};
      m.maximize = true;
      break;
    case ModelMode::MinB1:
      m.objective = {{b1, 1}};
      break;
    case ModelMode::MaxB1:
      m.objective = {{b1, 1}};
      m.maximize = true;
      break;
    case ModelMode::MinB2:
      m.objective = {{b2, 1}};
      break;
    case ModelMode::MaxB2:
      m.objective = {{b2, 1}};
      m.maximize = true;
      break;
    case ModelMode::MaxZeros: {
      for (int z : zetas) m.objective.push_back({z, 1});
      m.maximize = true;
      break;
    }
  }
  return m;
}

std::string export_lp(const LinearModel& model) {
  static const Rat kMaxBigM = Rat(Int(Int(1) << 24));
  for (const auto& bm : model.big_m_audit) {
    if (bm.value > kMaxBigM) {
      std::ostringstream os;
      os << "big-M " << num(bm.value) << " in constraint '" << bm.constraint
         << "' exceeds 2^24; the linearization is numerically unsafe at this word length";
      throw ModelExportError(os.str());
    }
  }
  std::ostringstream os;
  for (const auto& c : model.header_comments) os << "\\ " << c << "\n";
  os << (model.maximize ? "Maximize" : "Minimize") << "\n obj:";
  if (model.objective.empty()) {
    os << " 0 " << (model.variables.empty() ? "x" : model.variables[0].name);
  } else {
    for (const auto& t : model.objective) {
      const Rat& q = t.coefficient;
      os << (q < 0 ? " - " : " + ") << num(q < 0 ? Rat(-q) : q) << " "
         << model.variables[static_cast<std::size_t>(t.var)].name;
    }
  }
  os << "\nSubject To\n";
  for (const auto& c : model.constraints) {
    os << " " << c.name << ":";
    bool first = true;
    for (const auto& t : c.terms) {
      if (t.coefficient == 0) continue;
      const Rat& q = t.coefficient;
      if (q < 0)
        os << " - " << num(Rat(-q));
      else
        os << (first ? " " : " + ") << num(q);
      os << " " << model.variables[static_cast<std::size_t>(t.var)].name;
      first = false;
    }
    if (first) os << " 0 " << model.variables[0].name;
    os << (c.relation == Relation::Le ? " <= " : c.relation == Relation::Ge ? " >= " : " = ")
       << num(c.rhs) << "\n";
  }
  os << "Bounds\n";
  for (const auto& v : model.variables) {
    if (v.kind == VarKind::Binary) continue;
    os << " " << num(v.lower) << " <= " << v.name << " <= " << num(v.upper) << "\n";
  }
  bool any_int = false, any_bin = false;
  for (const auto& v : model.variables) {
    any_int |= v.kind == VarKind::Integer;
    any_bin |= v.kind == VarKind::Binary;
  }
  if (any_int) {
    os << "Generals\n";
    for (const auto& v : model.variables)
      if (v.kind == VarKind::Integer) os << " " << v.name << "\n";
  }
  if (any_bin) {
    os << "Binaries\n";
    for (const auto& v : model.variables)
      if (v.kind == VarKind::Binary) os << " " << v.name << "\n";
  }
  os << "End\n";
  return os.str();
}

CheckResult check_solution(const LinearModel& model,
                           const std::map<std::string, Rat>& assignment) {
  std::vector<Rat> vals(model.variables.size());
  for (std::size_t i = 0; i < model.variables.size(); ++i) {
    auto it = assignment.find(model.variables[i].name);
    if (it == assignment.end())
      throw std::invalid_argument("check_solution: missing variable " +
                                  model.variables[i].name);
    vals[i] = it->second;
    const auto& v = model.variables[i];
    if (vals[i] < v.lower || vals[i] > v.upper) return {false, "bounds:" + v.name};
    if (v.kind != VarKind::Continuous) {
      if (vals[i].get_den() != 1) return {false, "integrality:" + v.name};
      if (v.kind == VarKind::Binary && vals[i] != 0 && vals[i] != 1)
        return {false, "binary:" + v.name};
    }
  }
  for (const auto& c : model.constraints) {
    Rat lhs = 0;
    for (const auto& t : c.terms) lhs += t.coefficient * vals[static_cast<std::size_t>(t.var)];
    bool ok = c.relation == Relation::Le   ? lhs <= c.rhs
              : c.relation == Relation::Ge ? lhs >= c.rhs
                                           : lhs == c.rhs;
    if (!ok) return {false, c.name};
  }
  return {true, ""};
}

std::map<std::string, Rat> complete_assignment(const LinearModel& model,
                                               const DesignProblem& problem,
                                               const ModelBoxes& boxes,
                                               const QuantizedFilter& q) {
  (void)problem;
  (void)boxes;
  std::map<std::string, Rat> base{{"a1", Rat(static_cast<long>(q.a1))},
                                  {"a2", Rat(static_cast<long>(q.a2))},
                                  {"b0", Rat(static_cast<long>(q.b0))},
                                  {"b1", Rat(static_cast<long>(q.b1))},
                                  {"b2", Rat(static_cast<long>(q.b2))}};
  auto value_of = [&](const std::string& name) -> Rat {
    auto it = base.find(name);
    if (it == base.end())
      throw std::invalid_argument("complete_assignment: unknown base variable " + name);
    return it->second;
  };
  std::map<std::string, Rat> out = base;
  // two passes: abs/sign/zeta first, then bits and products which read them
  for (const auto& v : model.variables) {
    const std::string& n = v.name;
    auto ends_with = [&](const char* suf) {
      std::string s(suf);
      return n.size() > s.size() && n.compare(n.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with("_abs") && n.rfind("t_", 0) != 0) {
      Rat x = value_of(n.substr(0, n.size() - 4));
      out[n] = x < 0 ? Rat(-x) : x;
    } else if (ends_with("_sg")) {
      Rat x = value_of(n.substr(0, n.size() - 3));
      out[n] = x < 0 ? 1 : 0;
    } else if (n.rfind("zeta_", 0) == 0) {
      out[n] = value_of(n.substr(5)) == 0 ? 1 : 0;
    }
  }
  for (const auto& v : model.variables) {
    const std::string& n = v.name;
    if (n.rfind("t_", 0) == 0) {
      // t_<base>_abs_<i>
      auto pos = n.rfind('_');
      int bit = std::stoi(n.substr(pos + 1));
      Rat av = out.at(n.substr(2, pos - 2));
      Int ival = av.get_num();
      out[n] = mpz_tstbit(ival.get_mpz_t(), static_cast<unsigned long>(bit)) ? 1 : 0;
    }
  }
  for (const auto& v : model.variables) {
    const std::string& n = v.name;
    auto two_vars = [&](std::size_t start) {
      auto pos = n.find('_', start);
      std::string x = n.substr(start, pos - start);
      std::string rest = n.substr(pos + 1);
      return std::make_pair(x, rest);
    };
    if (n.rfind("zp_", 0) == 0) {
      auto [x, y] = two_vars(3);
      out[n] = out.at(x + "_abs") * out.at(y + "_abs");
    } else if (n.rfind("z_", 0) == 0) {
      auto [x, y] = two_vars(2);
      out[n] = value_of(x) * value_of(y);
    } else if (n.rfind("q_", 0) == 0) {
      auto [x, y] = two_vars(2);
      out[n] = (out.at(x + "_sg") == 1 && out.at(y + "_sg") == 1) ? 1 : 0;
    } else if (n.rfind("s_", 0) == 0) {
      auto [x, y] = two_vars(2);
      out[n] = (out.at(x + "_sg") != out.at(y + "_sg")) ? 1 : 0;
    } else if (n.rfind("u_", 0) == 0) {
      // u_<x>_<y>_<i> = t_<x>_abs_<i> * |y|
      auto pos = n.rfind('_');
      std::string bit = n.substr(pos + 1);
      auto [x, y] = two_vars(2);
      y = y.substr(0, y.rfind('_'));
      out[n] = out.at("t_" + x + "_abs_" + bit) * out.at(y + "_abs");
    }
  }
  return out;
}

}  // namespace iirforge
