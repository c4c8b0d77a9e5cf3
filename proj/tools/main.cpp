#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "iirforge/hardware.hpp"
#include "iirforge/json_io.hpp"
#include "iirforge/milp.hpp"
#include "iirforge/response.hpp"
#include "iirforge/search.hpp"

namespace fs = std::filesystem;
using namespace iirforge;

namespace {

constexpr int kExitInfeasible = 2;
constexpr int kExitTimedOut = 3;
constexpr int kExitUsage = 64;
constexpr int kExitDataErr = 65;
constexpr int kExitNoInput = 66;

struct ExpectedRow {
  const char* name;
  int w;
  int adders_mult, adders_structural, adders_total;
};

// published optima (smallest feasible word length per benchmark)
constexpr ExpectedRow kExpectedResults[] = {
    {"lp1_0", 4, 1, 4, 5}, {"lp1_1", 4, 1, 4, 5}, {"lp1_2", 4, 2, 4, 6},
    {"lp1_3", 4, 3, 4, 7}, {"lp1_4", 5, 4, 4, 8}, {"lp1_5", 5, 4, 4, 8},
    {"lp2_0", 4, 1, 4, 5}, {"lp2_1", 4, 1, 4, 5}, {"lp2_2", 5, 3, 4, 7},
    {"lp2_3", 6, 4, 4, 8}, {"lp3_0", 4, 1, 4, 5}, {"lp3_1", 4, 2, 4, 6},
    {"lp3_2", 4, 3, 4, 7}, {"lp3_3", 5, 3, 4, 7}, {"lp4", 4, 1, 4, 5},
    {"hp0", 6, 1, 2, 3},
};

FrequencySpec benchmark_by_name(const std::string& name, const Rat& tau) {
  auto us = name.rfind('_');
  if (us != std::string::npos) {
    std::string family = name.substr(0, us);
    int k = std::stoi(name.substr(us + 1));
    return builtin_benchmark(family, k, tau);
  }
  return builtin_benchmark(name, std::nullopt, tau);
}

struct SpecArgs {
  std::string benchmark;
  std::string spec_file;
  double tau = 0.02;

  void attach(CLI::App* cmd) {
    auto* b = cmd->add_option("--benchmark", benchmark,
                              "built-in benchmark (lp1_0..lp1_6, lp2_0.., lp3_0.., lp4, hp0)");
    auto* s = cmd->add_option("--spec", spec_file, "filter spec file");
    cmd->add_option("--tau", tau, "relative tolerance band for tabulated responses (hp0)");
    b->excludes(s);
  }

  FrequencySpec resolve() const {
    if (!benchmark.empty()) return benchmark_by_name(benchmark, rat_from_double(tau));
    if (spec_file.empty()) throw CLI::ValidationError("need --benchmark or --spec");
    if (!fs::exists(spec_file)) {
      std::cerr << "spec file not found: " << spec_file << "\n";
      std::exit(kExitNoInput);
    }
    return load_spec_file(spec_file);
  }
};

struct RangeOpt {
  std::string text;
  std::optional<std::pair<int, int>> parse(const char* what) const {
    if (text.empty()) return std::nullopt;
    auto colon = text.find(':');
    if (colon == std::string::npos)
      throw CLI::ValidationError(std::string(what) + ": expected lo:hi");
    return std::make_pair(std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1)));
  }
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void write_design_outputs(const fs::path& dir, const DesignResult& r,
                          const FrequencySpec& spec, double tau) {
  write_file(dir / "result.json", result_to_json(r, spec, tau));
  if (r.status != SolveStatus::Infeasible) {
    write_file(dir / "graph_a.dot", emit_dot(r.graph_a, "mult_a"));
    write_file(dir / "graph_b.dot", emit_dot(r.graph_b, "mult_b"));
    write_file(dir / "response.csv", response_csv(r.filter, spec));
  }
}

int status_exit(const DesignResult& r) {
  switch (r.status) {
    case SolveStatus::Optimal:
      return 0;
    case SolveStatus::Infeasible:
      return kExitInfeasible;
    case SolveStatus::TimedOut:
      return kExitTimedOut;
  }
  return 1;
}

std::string describe(const DesignResult& r) {
  std::ostringstream os;
  switch (r.status) {
    case SolveStatus::Infeasible:
      os << "infeasible";
      return os.str();
    case SolveStatus::TimedOut:
      os << "timed out";
      if (r.adders_total == 0) return os.str();
      os << " (incumbent: ";
      break;
    case SolveStatus::Optimal:
      os << "optimal (";
      break;
  }
  os << "A=" << r.adders_total << " = A_M " << r.adders_mult << " + A_S "
     << r.adders_structural << "; b'=(" << r.filter.b0 << "," << r.filter.b1 << ","
     << r.filter.b2 << ") g_b=" << r.filter.fmt_b.g << ", a'=(" << r.filter.a1 << ","
     << r.filter.a2 << ") g_a=" << r.filter.fmt_a.g << ")";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iirforge: optimal multiplierless second-order IIR filter designer"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "search worker threads (default: all cores)");

  // ---- design ----
  auto* design = app.add_subcommand("design", "design one filter at a given word length");
  SpecArgs dspec;
  dspec.attach(design);
  int d_w = 0;
  design->add_option("--wordlength,-w", d_w, "coefficient word length incl. sign")->required();
  int d_ppb = 300;
  design->add_option("--points-per-band", d_ppb, "grid points per band");
  bool d_nosbc = false;
  design->add_flag("--no-sbc", d_nosbc, "disable the symmetry-breaking constraint");
  RangeOpt d_gb, d_ga;
  design->add_option("--g-b-range", d_gb.text, "b MSB range lo:hi");
  design->add_option("--g-a-range", d_ga.text, "a MSB range lo:hi");
  double d_tl = 600;
  design->add_option("--time-limit", d_tl, "seconds per solve");
  double d_vstep = 1e-4;
  design->add_option("--verify-step", d_vstep, "a-posteriori verification step");
  bool d_noverify = false;
  design->add_flag("--no-verify", d_noverify, "skip continuous verification");
  std::string d_out = "out";
  design->add_option("--out", d_out, "output directory");
  bool d_print = false;
  design->add_flag("--print-config", d_print, "print the effective configuration");

  // ---- sweep ----
  auto* sweep = app.add_subcommand("sweep", "word-length sweep");
  SpecArgs sspec;
  sspec.attach(sweep);
  int s_wlo = 4, s_whi = 8;
  sweep->add_option("--w-lo", s_wlo, "first word length");
  sweep->add_option("--w-hi", s_whi, "last word length");
  int s_ppb = 300;
  sweep->add_option("--points-per-band", s_ppb, "grid points per band");
  double s_tl = 600;
  sweep->add_option("--time-limit", s_tl, "seconds per solve");
  std::string s_out = "sweep.csv";
  sweep->add_option("--out", s_out, "output CSV");

  // ---- export-ilp ----
  auto* exp = app.add_subcommand("export-ilp", "export the linearized design model (LP format)");
  SpecArgs espec;
  espec.attach(exp);
  int e_w = 0;
  exp->add_option("--wordlength,-w", e_w, "coefficient word length")->required();
  int e_ppb = 300;
  exp->add_option("--points-per-band", e_ppb, "grid points per band");
  std::string e_mode = "feasibility";
  exp->add_option("--mode", e_mode,
                  "feasibility | min_b0 | max_b0 | min_b1 | max_b1 | min_b2 | max_b2 | max_zeros");
  std::optional<int> e_ga, e_gb;
  exp->add_option("--g-a", e_ga, "a MSB position (default: stability bound)");
  exp->add_option("--g-b", e_gb, "b MSB position (default: preprocessing bound)");
  bool e_nosbc = false;
  exp->add_flag("--no-sbc", e_nosbc, "omit the symmetry-breaking constraint");
  std::string e_out = "model.lp";
  exp->add_option("--out", e_out, "output file");

  // ---- emit ----
  auto* emit = app.add_subcommand("emit", "emit VHDL and adder-graph DOT from a result");
  std::string m_result;
  emit->add_option("--result", m_result, "result JSON from design")->required();
  int m_lsb_in = -16, m_msb_in = -1, m_lsb_out = -16;
  emit->add_option("--lsb-in", m_lsb_in, "input lsb position");
  emit->add_option("--msb-in", m_msb_in, "input msb position");
  emit->add_option("--lsb-out", m_lsb_out, "output lsb position");
  std::string m_entity = "iir2";
  emit->add_option("--entity", m_entity, "VHDL entity name");
  std::string m_out = "hw";
  emit->add_option("--out", m_out, "output directory");

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "bit-accurate fixed-point simulation");
  std::string q_result;
  sim->add_option("--result", q_result, "result JSON from design")->required();
  int q_lsb_in = -16, q_msb_in = -1, q_lsb_out = -16;
  sim->add_option("--lsb-in", q_lsb_in, "input lsb position");
  sim->add_option("--msb-in", q_msb_in, "input msb position");
  sim->add_option("--lsb-out", q_lsb_out, "output lsb position");
  long q_count = 10000;
  sim->add_option("--count", q_count, "number of random inputs");
  unsigned long q_seed = 1;
  sim->add_option("--seed", q_seed, "random seed");
  std::string q_input;
  sim->add_option("--input-file", q_input, "one integer input code per line");
  std::string q_out = "trace.csv";
  sim->add_option("--out", q_out, "trace CSV");

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "run the published benchmark table and diff");
  std::string b_only;
  bench->add_option("--only", b_only, "run a single benchmark row");
  int b_ppb = 300;
  bench->add_option("--points-per-band", b_ppb, "grid points per band");
  double b_tl = 600;
  bench->add_option("--time-limit", b_tl, "seconds per solve");
  std::string b_out;
  bench->add_option("--out", b_out, "write per-row CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*design) {
      FrequencySpec spec = dspec.resolve();
      SolveOptions opt;
      opt.use_sbc = !d_nosbc;
      opt.threads = threads;
      opt.time_limit_s = d_tl;
      opt.points_per_band = d_ppb;
      opt.g_b_range = d_gb.parse("--g-b-range");
      opt.g_a_range = d_ga.parse("--g-a-range");
      if (d_print) {
        std::cout << "spec=" << spec.name << " w=" << d_w << " points_per_band=" << d_ppb
                  << " sbc=" << (opt.use_sbc ? 1 : 0) << " time_limit=" << d_tl
                  << " verify_step=" << d_vstep << " tau=" << dspec.tau
                  << " threads=" << threads << "\n";
      }
      DesignProblem p = make_problem(spec, d_w, opt);
      DesignResult r = d_noverify ? solve(p) : design_with_verification(p, d_vstep);
      write_design_outputs(d_out, r, spec, dspec.tau);
      std::cout << spec.name << " w=" << d_w << ": " << describe(r);
      if (!d_noverify && r.status == SolveStatus::Optimal)
        std::cout << (r.verified ? " [verified]" : " [unverified: margin below certificate]");
      std::cout << "\n";
      return status_exit(r);
    }

    if (*sweep) {
      FrequencySpec spec = sspec.resolve();
      if (s_wlo > s_whi) throw CLI::ValidationError("--w-lo must be <= --w-hi");
      SolveOptions opt;
      opt.threads = threads;
      opt.time_limit_s = s_tl;
      opt.points_per_band = s_ppb;
      auto rows = wordlength_sweep(spec, s_wlo, s_whi, opt);
      std::ostringstream csv;
      csv << "w,status,A_M,A_S,A_total\n";
      for (const auto& row : rows) {
        csv << row.w << ",";
        if (row.result.status == SolveStatus::Optimal)
          csv << "optimal," << row.result.adders_mult << "," << row.result.adders_structural
              << "," << row.result.adders_total;
        else
          csv << (row.result.status == SolveStatus::Infeasible ? "infeasible" : "timed_out")
              << ",,,";
        csv << "\n";
        std::cout << spec.name << " w=" << row.w << ": " << describe(row.result) << "\n";
      }
      write_file(s_out, csv.str());
      return 0;
    }

    if (*exp) {
      FrequencySpec spec = espec.resolve();
      SolveOptions opt;
      opt.use_sbc = !e_nosbc;
      opt.points_per_band = e_ppb;
      DesignProblem p = make_problem(spec, e_w, opt);
      BBox crude = b_bounds(spec, p.grid);
      ModelBoxes boxes;
      boxes.g_a = e_ga.value_or(a_bounds().g_a);
      boxes.g_b = e_gb.value_or(crude.g_b);
      const std::int64_t half = std::int64_t{1} << (e_w - 1);
      for (int k = 0; k < 3; ++k) {
        double scaled = std::ldexp(crude.bound[k], -(boxes.g_b - e_w + 1));
        std::int64_t m = scaled >= static_cast<double>(half)
                             ? half
                             : static_cast<std::int64_t>(std::floor(scaled));
        boxes.b[k] = {std::max(-half, -m), std::min(half - 1, m)};
      }
      ModelMode mode;
      if (e_mode == "feasibility")
        mode = ModelMode::Feasibility;
      else if (e_mode == "min_b0")
        mode = ModelMode::MinB0;
      else if (e_mode == "max_b0")
        mode = ModelMode::MaxB0;
      else if (e_mode == "min_b1")
        mode = ModelMode::MinB1;
      else if (e_mode == "max_b1")
        mode = ModelMode::MaxB1;
      else if (e_mode == "min_b2")
        mode = ModelMode::MinB2;
      else if (e_mode == "max_b2")
        mode = ModelMode::MaxB2;
      else if (e_mode == "max_zeros")
        mode = ModelMode::MaxZeros;
      else
        throw CLI::ValidationError("unknown --mode '" + e_mode + "'");
      LinearModel model = build_design_model(p, boxes, mode);
      try {
        write_file(e_out, export_lp(model));
      } catch (const ModelExportError& err) {
        std::cerr << "export refused: " << err.what() << "\n";
        return kExitDataErr;
      }
      std::cout << "wrote " << e_out << " (" << model.variables.size() << " variables, "
                << model.constraints.size() << " constraints)\n";
      return 0;
    }

    if (*emit || *sim) {
      const std::string result_path = *emit ? m_result : q_result;
      if (!fs::exists(result_path)) {
        std::cerr << "result file not found: " << result_path << "\n";
        return kExitNoInput;
      }
      std::ifstream in(result_path);
      std::stringstream buf;
      buf << in.rdbuf();
      QuantizedFilter q = filter_from_json(buf.str());
      auto ga = solve_mcm({q.a1, q.a2});
      auto gb = solve_mcm({q.b0, q.b1, q.b2});
      if (!ga || !gb) throw std::runtime_error("multiplier block exceeds the adder budget");

      if (*emit) {
        Datapath dp = size_datapath(q, *ga, *gb, {m_msb_in, m_lsb_in}, m_lsb_out);
        fs::path dir(m_out);
        write_file(dir / (m_entity + ".vhdl"), emit_vhdl(dp, m_entity));
        write_file(dir / "graph_a.dot", emit_dot(*ga, "mult_a"));
        write_file(dir / "graph_b.dot", emit_dot(*gb, "mult_b"));
        std::cout << "entity " << m_entity << ": " << dp.total_adders()
                  << " adders, guard bits G=" << dp.guard << ", l_ext=" << dp.l_ext << "\n";
        return 0;
      }

      Datapath dp = size_datapath(q, *ga, *gb, {q_msb_in, q_lsb_in}, q_lsb_out);
      std::vector<std::int64_t> xs;
      if (!q_input.empty()) {
        std::ifstream xin(q_input);
        if (!xin) {
          std::cerr << "input file not found: " << q_input << "\n";
          return kExitNoInput;
        }
        std::int64_t v;
        while (xin >> v) xs.push_back(v);
      } else {
        std::mt19937_64 rng(q_seed);
        const std::int64_t lim = (std::int64_t{1} << (dp.in.msb - dp.in.lsb));
        std::uniform_int_distribution<std::int64_t> dist(-lim, lim - 1);
        xs.reserve(static_cast<std::size_t>(q_count));
        for (long i = 0; i < q_count; ++i) xs.push_back(dist(rng));
      }
      auto fixed = simulate_fixed(dp, xs);
      auto ref = simulate_reference(q, dp.in, xs);
      const Rat ulp = pow2(dp.out.lsb);
      Rat max_err = 0;
      std::ostringstream csv;
      csv << "n,x,y_fixed,y_reference,error_ulps\n";
      for (std::size_t i = 0; i < xs.size(); ++i) {
        Rat err = Rat(static_cast<long>(fixed[i])) * ulp - ref[i];
        Rat aerr = err < 0 ? Rat(-err) : err;
        if (aerr > max_err) max_err = aerr;
        csv << i << "," << xs[i] << "," << fixed[i] << "," << ref[i].get_d() << ","
            << Rat(err / ulp).get_d() << "\n";
      }
      write_file(q_out, csv.str());
      double ulps = Rat(max_err / ulp).get_d();
      std::cout << "simulated " << xs.size() << " samples: max |fixed - reference| = " << ulps
                << " ulp (faithful iff < 1)\n";
      return ulps < 1.0 ? 0 : 1;
    }

    if (*bench) {
      std::ostringstream csv;
      csv << "name,w,expected_A,A_M,A_S,A_total,status,match,seconds\n";
      int mismatches = 0;
      for (const auto& row : kExpectedResults) {
        if (!b_only.empty() && b_only != row.name) continue;
        FrequencySpec spec = benchmark_by_name(row.name, Rat(1, 50));
        SolveOptions opt;
        opt.threads = threads;
        opt.time_limit_s = b_tl;
        opt.points_per_band = b_ppb;
        DesignProblem p = make_problem(spec, row.w, opt);
        DesignResult r = solve(p);
        bool match = r.status == SolveStatus::Optimal && r.adders_total == row.adders_total;
        mismatches += match ? 0 : 1;
        csv << row.name << "," << row.w << "," << row.adders_total << ",";
        if (r.status == SolveStatus::Optimal)
          csv << r.adders_mult << "," << r.adders_structural << "," << r.adders_total;
        else
          csv << ",,";
        csv << ","
            << (r.status == SolveStatus::Optimal     ? "optimal"
                : r.status == SolveStatus::Infeasible ? "infeasible"
                                                      : "timed_out")
            << "," << (match ? "yes" : "NO") << "," << r.seconds << "\n";
        std::cout << row.name << " w=" << row.w << ": expected A=" << row.adders_total
                  << ", got " << describe(r) << (match ? "" : "   <-- MISMATCH") << "\n";
      }
      if (!b_out.empty()) write_file(b_out, csv.str());
      std::cout << (mismatches == 0 ? "all rows match\n"
                                    : std::to_string(mismatches) + " row(s) mismatch\n");
      return mismatches == 0 ? 0 : 1;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
