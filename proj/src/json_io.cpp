#include "iirforge/json_io.hpp"

#include <json.hpp>

namespace iirforge {

using nlohmann::json;

namespace {

json graph_to_json(const AdderGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back({{"value", n.value},
                     {"left", n.left},
                     {"right", n.right},
                     {"left_shift", n.left_shift},
                     {"right_shift", n.right_shift},
                     {"right_sign", n.right_sign}});
  }
  json targets = json::array();
  for (const auto& t : g.targets) {
    targets.push_back({{"constant", t.constant},
                       {"node", t.node},
                       {"output_shift", t.output_shift},
                       {"sign", t.sign}});
  }
  return {{"nodes", nodes}, {"targets", targets}, {"adders", g.adder_count()}};
}

std::string decimal(const Rat& q) {
  auto s = rat_to_decimal(q);
  return s ? *s : q.get_str();
}

}  // namespace

std::string result_to_json(const DesignResult& r, const FrequencySpec& spec, double tau_used) {
  json j;
  j["spec"] = spec.name;
  j["status"] = r.status == SolveStatus::Optimal     ? "optimal"
                : r.status == SolveStatus::Infeasible ? "infeasible"
                                                      : "timed_out";
  if (r.status != SolveStatus::Infeasible) {
    auto rc = r.filter.to_real();
    j["coefficients"] = {
        {"a_int", {r.filter.a1, r.filter.a2}},
        {"b_int", {r.filter.b0, r.filter.b1, r.filter.b2}},
        {"w", r.filter.fmt_a.w},
        {"g_a", r.filter.fmt_a.g},
        {"g_b", r.filter.fmt_b.g},
        {"a_real", {decimal(rc.a1), decimal(rc.a2)}},
        {"b_real", {decimal(rc.b0), decimal(rc.b1), decimal(rc.b2)}},
    };
    j["adders"] = {{"A_M_a", r.adders_mult_a},
                   {"A_M_b", r.adders_mult_b},
                   {"A_M", r.adders_mult},
                   {"A_S", r.adders_structural},
                   {"A_total", r.adders_total}};
    j["zeros"] = r.zero_coefficient;
    j["graph_a"] = graph_to_json(r.graph_a);
    j["graph_b"] = graph_to_json(r.graph_b);
  }
  j["certificate"] = {{"a_pairs", r.a_pairs_enumerated},
                      {"candidates_checked", r.candidates_checked},
                      {"candidates_feasible", r.candidates_feasible},
                      {"candidates_cost_pruned", r.candidates_cost_pruned}};
  j["verification"] = {{"verified", r.verified},
                       {"iterations", r.verify_iterations},
                       {"appended_frequencies", r.appended_frequencies}};
  j["timing_seconds"] = r.seconds;
  j["tau"] = tau_used;
  return j.dump(2) + "\n";
}

QuantizedFilter filter_from_json(const std::string& text) {
  json j = json::parse(text);
  const auto& c = j.at("coefficients");
  QuantizedFilter q;
  q.a1 = c.at("a_int").at(0).get<std::int64_t>();
  q.a2 = c.at("a_int").at(1).get<std::int64_t>();
  q.b0 = c.at("b_int").at(0).get<std::int64_t>();
  q.b1 = c.at("b_int").at(1).get<std::int64_t>();
  q.b2 = c.at("b_int").at(2).get<std::int64_t>();
  q.fmt_a = {c.at("w").get<int>(), c.at("g_a").get<int>()};
  q.fmt_b = {c.at("w").get<int>(), c.at("g_b").get<int>()};
  return q;
}

}  // namespace iirforge
