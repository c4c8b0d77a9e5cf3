#include "iirforge/filterspec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace iirforge {

namespace {

// Tabulated magnitude response of the hp0 compensator, omega = 0.00..1.00
// step 0.01. The first three points (steep transition) are excluded from the
// spec band; see builtin_benchmark.
const char* kHp0Mag[] = {
    "0.01997896950578355", "0.7101620632256287", "0.9039096080179476", "0.9609505189078075",
    "0.9836379338588604", "0.994700396881582", "1.0008690497573036", "1.0046447327141095",
    "1.0071183799521026", "1.0088249358402237", "1.0100509711015229", "1.0109609795665886",
    "1.0116547571935135", "1.012195657854909", "1.0126254510373578", "1.0129725715336149",
    "1.0132569152183268", "1.0134927385113728", "1.0136904718329536", "1.01385788791649",
    "1.014000874386352", "1.014123956614239", "1.014230658971093", "1.0143237591105754",
    "1.0144054699936893", "1.014477572193959", "1.014541511413719", "1.014598471282735",
    "1.0146494283462684", "1.0146951940524276", "1.014736447135597", "1.0147737588262111",
    "1.0148076126467267", "1.0148384200825373", "1.0148665330815216", "1.0148922540948997",
    "1.0149158441968604", "1.0149375296918048", "1.0149575075227262", "1.0149759497229867",
    "1.0149930071000521", "1.0150088122989465", "1.0150234823619473", "1.0150371208770121",
    "1.0150498197887345", "1.0150616609310645", "1.0150727173295888", "1.0150830543121194",
    "1.0150927304591606", "1.0151017984201003", "1.015110305616359", "1.0151182948490423",
    "1.0151258048256158", "1.0151328706177094", "1.0151395240601369", "1.0151457940995923",
    "1.0151517071001486", "1.0151572871115495", "1.0151625561053792", "1.0151675341834219",
    "1.0151722397618879", "1.0151766897346253", "1.0151808996180218", "1.015184883679879",
    "1.0151886550542555", "1.0151922258439823", "1.0151956072123296", "1.0151988094651045",
    "1.0152018421242945", "1.0152047139942253", "1.015207433221076", "1.0152100073464863",
    "1.0152124433559093", "1.0152147477222722", "1.0152169264454407", "1.0152189850879305",
    "1.0152209288072471", "1.0152227623851995", "1.0152244902544822", "1.0152261165228047",
    "1.0152276449947872", "1.0152290791918521", "1.0152304223702768", "1.0152316775375951",
    "1.015232847467474", "1.0152339347132104", "1.0152349416199584", "1.015235870335791",
    "1.015236722821692", "1.0152375008605523", "1.0152382060652494", "1.0152388398858745",
    "1.015239403616158", "1.0152398983991473", "1.01524032523218", "1.015240684971187",
    "1.0152409783343637", "1.0152412059052285", "1.0152413681350962", "1.0152414653449857",
    "1.0152414977269706"};

BandSpec constant_band(const Rat& lo, const Rat& hi, const Rat& beta_lo, const Rat& beta_hi) {
  BandSpec b;
  b.omega_lo = lo;
  b.omega_hi = hi;
  b.beta_lo.constant = beta_lo;
  b.beta_hi.constant = beta_hi;
  return b;
}

}  // namespace

Rat BoundFunction::eval(const Rat& omega) const {
  if (is_constant()) return constant;
  if (omega <= omegas.front()) return values.front();
  if (omega >= omegas.back()) return values.back();
  auto it = std::upper_bound(omegas.begin(), omegas.end(), omega);
  std::size_t i = static_cast<std::size_t>(it - omegas.begin());
  const Rat &x0 = omegas[i - 1], &x1 = omegas[i];
  const Rat &y0 = values[i - 1], &y1 = values[i];
  return y0 + (y1 - y0) * (omega - x0) / (x1 - x0);
}

double BoundFunction::eval_d(double omega) const { return eval(rat_from_double(omega)).get_d(); }

Rat BoundFunction::max_on(const Rat& lo, const Rat& hi) const {
  if (is_constant()) return constant;
  Rat m = eval(lo);
  Rat e = eval(hi);
  if (e > m) m = e;
  for (std::size_t i = 0; i < omegas.size(); ++i)
    if (omegas[i] > lo && omegas[i] < hi && values[i] > m) m = values[i];
  return m;
}

Rat BoundFunction::max_slope_on(const Rat& lo, const Rat& hi) const {
  if (is_constant()) return 0;
  Rat m = 0;
  for (std::size_t i = 1; i < omegas.size(); ++i) {
    if (omegas[i] <= lo || omegas[i - 1] >= hi) continue;
    Rat s = (values[i] - values[i - 1]) / (omegas[i] - omegas[i - 1]);
    if (s < 0) s = -s;
    if (s > m) m = s;
  }
  return m;
}

void BandSpec::validate() const {
  if (omega_lo < 0 || omega_hi > 1 || omega_lo > omega_hi)
    throw std::invalid_argument("band: need 0 <= lo <= hi <= 1");
  auto chk = [&](const Rat& w) {
    Rat lo = beta_lo.eval(w), hi = beta_hi.eval(w);
    if (lo < 0) throw std::invalid_argument("band: beta_lo < 0");
    if (lo > hi) throw std::invalid_argument("band: beta_lo > beta_hi");
  };
  chk(omega_lo);
  chk(omega_hi);
  for (const auto* f : {&beta_lo, &beta_hi})
    for (const Rat& w : f->omegas)
      if (w > omega_lo && w < omega_hi) chk(w);
}

void FrequencySpec::validate() const {
  if (bands.empty()) throw std::invalid_argument("spec: no bands");
  for (const auto& b : bands) b.validate();
  for (std::size_t i = 1; i < bands.size(); ++i)
    if (bands[i].omega_lo < bands[i - 1].omega_hi)
      throw std::invalid_argument("spec: overlapping bands");
}

std::optional<std::size_t> FrequencySpec::band_of(const Rat& omega) const {
  for (std::size_t i = 0; i < bands.size(); ++i)
    if (omega >= bands[i].omega_lo && omega <= bands[i].omega_hi) return i;
  return std::nullopt;
}

std::int64_t canonical_cos(double angle_times_pi) {
  double c = std::cos(M_PI * angle_times_pi);
  return static_cast<std::int64_t>(std::llround(c * static_cast<double>(kCosDen)));
}

FrequencySpec builtin_benchmark(const std::string& name, std::optional<int> k, const Rat& tau) {
  FrequencySpec spec;
  auto need_k = [&](int lo, int hi) {
    if (!k || *k < lo || *k > hi)
      throw std::invalid_argument("benchmark " + name + ": k out of range");
  };
  auto no_k = [&] {
    if (k) throw std::invalid_argument("benchmark " + name + " takes no k");
  };
  const Rat d10(1, 10);
  if (name == "lp1") {
    need_k(0, 6);
    Rat d = d10 - Rat(*k, 100);
    spec.bands.push_back(constant_band(0, Rat(3, 10), 1 - d, 1 + d));
    spec.bands.push_back(constant_band(Rat(7, 10), 1, 0, d));
  } else if (name == "lp2") {
    need_k(0, 4);
    spec.bands.push_back(constant_band(0, Rat(30 + 5 * *k, 100), 1 - d10, 1 + d10));
    spec.bands.push_back(constant_band(Rat(7, 10), 1, 0, d10));
  } else if (name == "lp3") {
    need_k(0, 4);
    spec.bands.push_back(constant_band(0, Rat(3, 10), 1 - d10, 1 + d10));
    spec.bands.push_back(constant_band(Rat(70 - 5 * *k, 100), 1, 0, d10));
  } else if (name == "lp4") {
    no_k();
    spec.bands.push_back(constant_band(0, Rat(1, 2), 1 - d10, 1 + d10));
    spec.bands.push_back(constant_band(Rat(9, 10), 1, 0, d10));
  } else if (name == "hp0") {
    no_k();
    BandSpec b;
    b.omega_lo = Rat(3, 100);
    b.omega_hi = 1;
    // tolerance band around the tabulated response, first three points excluded
    for (int i = 3; i <= 100; ++i) {
      Rat h = rat_from_decimal(kHp0Mag[i]);
      Rat w(i, 100);
      b.beta_lo.omegas.push_back(w);
      b.beta_lo.values.push_back(h * (1 - tau));
      b.beta_hi.omegas.push_back(w);
      b.beta_hi.values.push_back(h * (1 + tau));
    }
    spec.bands.push_back(std::move(b));
  } else {
    throw std::invalid_argument("unknown benchmark '" + name + "'");
  }
  spec.name = k ? name + "_" + std::to_string(*k) : name;
  spec.validate();
  return spec;
}

std::vector<std::pair<std::string, std::optional<int>>> builtin_benchmark_list() {
  std::vector<std::pair<std::string, std::optional<int>>> v;
  for (int k = 0; k <= 6; ++k) v.emplace_back("lp1", k);
  for (int k = 0; k <= 4; ++k) v.emplace_back("lp2", k);
  for (int k = 0; k <= 4; ++k) v.emplace_back("lp3", k);
  v.emplace_back("lp4", std::nullopt);
  v.emplace_back("hp0", std::nullopt);
  return v;
}

namespace {

GridPoint make_point(const Rat& omega, const BandSpec& band) {
  GridPoint p;
  p.omega = omega;
  p.omega_d = omega.get_d();
  p.c1 = canonical_cos(p.omega_d);
  p.c2 = canonical_cos(2 * p.omega_d);
  Rat lo = band.beta_lo.eval(omega), hi = band.beta_hi.eval(omega);
  p.beta_lo_sq = lo * lo;
  p.beta_hi_sq = hi * hi;
  return p;
}

}  // namespace

FrequencyGrid discretize(const FrequencySpec& spec, int points_per_band) {
  if (points_per_band < 2) throw std::invalid_argument("discretize: points_per_band >= 2");
  FrequencyGrid grid;
  for (const auto& band : spec.bands) {
    for (int i = 0; i < points_per_band; ++i) {
      Rat omega =
          band.omega_lo + (band.omega_hi - band.omega_lo) * Rat(i, points_per_band - 1);
      grid.points.push_back(make_point(omega, band));
    }
  }
  return grid;
}

void append_frequency(FrequencyGrid& grid, const Rat& omega, const FrequencySpec& spec) {
  auto idx = spec.band_of(omega);
  if (!idx)
    throw std::invalid_argument("append_frequency: omega lies in no band (don't-care gap)");
  for (const auto& p : grid.points)
    if (p.omega == omega) return;
  grid.points.push_back(make_point(omega, spec.bands[*idx]));
}

// ---------------------------------------------------------------------------
// spec file: line-based key/value format with [[band]] sections
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<Rat> parse_array(const std::string& text) {
  std::vector<Rat> out;
  std::string body = trim(text);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']')
    throw std::invalid_argument("spec file: expected [ ... ] array");
  body = body.substr(1, body.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(rat_from_decimal(item));
  }
  return out;
}

}  // namespace

FrequencySpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file '" + path + "'");
  FrequencySpec spec;
  BandSpec* band = nullptr;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line == "[[band]]") {
      spec.bands.emplace_back();
      band = &spec.bands.back();
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "name") {
      if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
        val = val.substr(1, val.size() - 2);
      spec.name = val;
      continue;
    }
    if (!band) fail("key '" + key + "' outside a [[band]] section");
    if (key == "lo")
      band->omega_lo = rat_from_decimal(val);
    else if (key == "hi")
      band->omega_hi = rat_from_decimal(val);
    else if (key == "beta_lo")
      band->beta_lo.constant = rat_from_decimal(val);
    else if (key == "beta_hi")
      band->beta_hi.constant = rat_from_decimal(val);
    else if (key == "beta_lo_omega")
      band->beta_lo.omegas = parse_array(val);
    else if (key == "beta_lo_value")
      band->beta_lo.values = parse_array(val);
    else if (key == "beta_hi_omega")
      band->beta_hi.omegas = parse_array(val);
    else if (key == "beta_hi_value")
      band->beta_hi.values = parse_array(val);
    else
      fail("unknown key '" + key + "'");
  }
  for (auto& b : spec.bands) {
    for (auto* f : {&b.beta_lo, &b.beta_hi})
      if (f->omegas.size() != f->values.size())
        throw std::runtime_error(path + ": omega/value tables differ in length");
  }
  if (spec.name.empty()) spec.name = "custom";
  spec.validate();
  return spec;
}

std::string spec_to_file_text(const FrequencySpec& spec) {
  std::ostringstream os;
  os << "name = \"" << spec.name << "\"\n";
  auto emit_bound = [&os](const char* key, const BoundFunction& f) {
    if (f.is_constant()) {
      os << key << " = " << *rat_to_decimal(f.constant) << "\n";
      return;
    }
    auto arr = [&os](const char* k2, const std::vector<Rat>& v) {
      os << k2 << " = [";
      for (std::size_t i = 0; i < v.size(); ++i)
        os << (i ? ", " : "") << *rat_to_decimal(v[i]);
      os << "]\n";
    };
    arr((std::string(key) + "_omega").c_str(), f.omegas);
    arr((std::string(key) + "_value").c_str(), f.values);
  };
  for (const auto& b : spec.bands) {
    os << "\n[[band]]\n";
    os << "lo = " << *rat_to_decimal(b.omega_lo) << "\n";
    os << "hi = " << *rat_to_decimal(b.omega_hi) << "\n";
    emit_bound("beta_lo", b.beta_lo);
    emit_bound("beta_hi", b.beta_hi);
  }
  return os.str();
}

}  // namespace iirforge
