// Copyright 2026 The icschaos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "icschaos/config.hpp"
#include "icschaos/errors.hpp"
#include "icschaos/report.hpp"

using namespace icschaos;

namespace {

bool any_contains(const std::vector<std::string>& errs, const std::string& a, const std::string& b = "") {
  return std::any_of(errs.begin(), errs.end(), [&](const std::string& e) {
    return e.find(a) != std::string::npos && e.find(b) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("every demo scenario validates and builds") {
  for (const auto& s : demo_scenarios()) {
    Json cfg = demo_tec_config(s);
    CAPTURE(s);
    CHECK(validate_config(cfg).empty());
    CHECK_NOTHROW(build_spec(cfg));
    // Round trip through text.
    CHECK(validate_config(Json::parse(cfg.dump(2))).empty());
  }
  CHECK_THROWS_AS(demo_tec_config("nope"), ConfigError);
}

TEST_CASE("demo carries the nominal feeds and reactor envelope") {
  Json cfg = demo_tec_config("nominal");
  const Json& u = cfg["plant"]["open_loop_inputs"];
  CHECK(u["feed_A_kscmh"].get<double>() == 0.25);
  CHECK(u["feed_B_kg_per_h"].get<double>() == 3686.0);
  CHECK(u["feed_C_kscmh"].get<double>() == 9.35);
  const Json& t = cfg["plant"]["limits"]["reactor_temperature_C"];
  CHECK(t["normal_high"].get<double>() == 150.0);
  CHECK(t["shutdown_high"].get<double>() == 175.0);
  auto spec = build_spec(cfg);
  CHECK(spec.setup.nominal_input(1) == 3686.0);
  REQUIRE(spec.certificate);
  CHECK(spec.certificate->passed);
}

TEST_CASE("limit ordering violations name the pair") {
  Json cfg = demo_tec_config("nominal");
  cfg["plant"]["limits"]["reactor_temperature_C"]["normal_high"] = 200.0;
  auto errs = validate_config(cfg);
  CHECK(any_contains(errs, "/plant/limits/reactor_temperature_C", "normal_high > shutdown_high"));
}

TEST_CASE("unknown keys are reported with their path") {
  Json cfg = demo_tec_config("nominal");
  cfg["network"]["links"][0]["latencey_min"] = 1.0;
  auto errs = validate_config(cfg);
  CHECK(any_contains(errs, "/network/links/0/latencey_min", "unknown key"));
  cfg["bogus"] = 1;
  CHECK(any_contains(validate_config(cfg), "/bogus"));
  CHECK_THROWS_AS(build_spec(cfg), ConfigError);
}

TEST_CASE("infeasible demand is a config error mentioning Infeasible") {
  Json cfg = demo_tec_config("nominal");
  cfg["disutilities"]["demand"] = 50.0;
  auto errs = validate_config(cfg);
  CHECK(any_contains(errs, "/disutilities", "Infeasible"));
}

TEST_CASE("event parameters are checked") {
  Json cfg = demo_tec_config("nominal");
  cfg["events"] = Json::array({{{"type", "inject_latency"}, {"start_min", 0.0}, {"links", Json::array({"TT1->HMI"})},
                                {"added_latency_min", 1.0}, {"duration_min", 5.0}},
                               {{"type", "fail_sensor"}, {"start_min", 0.0}, {"node", "TT1"}, {"mode", "melted"},
                                {"duration_min", 5.0}},
                               {{"type", "warp"}, {"start_min", 0.0}}});
  auto errs = validate_config(cfg);
  CHECK(any_contains(errs, "/events/0/links/0"));
  CHECK(any_contains(errs, "/events/1/mode"));
  CHECK(any_contains(errs, "/events/2/type", "unknown event type"));
}

TEST_CASE("linear test plant configs") {
  Json cfg = {
      {"name", "k2"},
      {"topology", {{"nodes", Json::array({{{"name", "a1"}}, {{"name", "a2"}}})},
                    {"edges", Json::array({{{"from", "a1"}, {"to", "a2"}, {"weight", 1.0}},
                                           {{"from", "a2"}, {"to", "a1"}, {"weight", 1.0}}})}}},
      {"plant", {{"model", "linear_test"}, {"params", {{"size", 2}}}, {"initial_state", {{"x1", 1.0}, {"x2", -1.0}}}}},
      {"agents", Json::array({{{"node", "a1"}, {"input", "u1"}, {"measure", "y1"}, {"u0", 0.0}},
                              {{"node", "a2"}, {"input", "u2"}, {"measure", "y2"}, {"u0", 0.0}}})},
      {"steady_state", {{"metric", "x1"}, {"window_min", 5.0}, {"band", 1e-3}, {"hold_min", 5.0}}},
      {"hypothesis", {{"metric", "x1"}, {"band", Json::array({-0.5, 0.5})}, {"horizon_min", 10.0}}},
      {"run", {{"duration_min", 10.0}, {"seed", 1}, {"settle_limit_min", 200.0}}},
  };
  auto errs = validate_config(cfg);
  INFO(Json(errs).dump());
  REQUIRE(errs.empty());
  auto spec = build_spec(cfg);
  auto r = run_experiment(spec);
  CHECK(r.verdict.kind == VerdictKind::Held);
  REQUIRE(r.steady);
  CHECK(std::abs(r.steady->baseline) < 1e-3);
}

TEST_CASE("numeric patches") {
  Json cfg = demo_tec_config("latency");
  Json p = patch_number(cfg, "/events/0/added_latency_min", 20.0);
  CHECK(p["events"][0]["added_latency_min"].get<double>() == 20.0);
  CHECK(cfg["events"][0]["added_latency_min"].get<double>() == 5.0);
  Json s = patch_number(cfg, "/run/seed", 7.0);
  CHECK(s["run"]["seed"].is_number_integer());
  CHECK(s["run"]["seed"].get<std::uint64_t>() == 7);
  CHECK_THROWS_AS(patch_number(cfg, "/run/nope", 1.0), ConfigError);
  CHECK_THROWS_AS(patch_number(cfg, "/name", 1.0), ConfigError);
  CHECK_THROWS_AS(patch_number(cfg, "no-slash", 1.0), ConfigError);
  CHECK(config_hash(cfg) == config_hash(Json::parse(cfg.dump())));
  CHECK(config_hash(cfg) != config_hash(p));
  CHECK(config_hash(cfg).size() == 64);
}

TEST_CASE("seed sweeps only move stochastic fields") {
  Json cfg = demo_tec_config("router-outage");
  std::vector<ExperimentSpec> specs;
  for (double seed : {1.0, 2.0, 3.0}) specs.push_back(build_spec(patch_number(cfg, "/run/seed", seed)));
  auto out = batch_run(specs, 2);
  std::vector<Json> rec;
  for (const auto& o : out) {
    REQUIRE(o.result);
    rec.push_back(result_record(*o.result, "s", "h"));
  }
  for (std::size_t i = 1; i < rec.size(); ++i) {
    CHECK(rec[i]["verdict"]["kind"] == rec[0]["verdict"]["kind"]);
    CHECK(rec[i]["t_injection"] == rec[0]["t_injection"]);
    CHECK(rec[i]["setpoints"] == rec[0]["setpoints"]);
    CHECK(rec[i]["events"] == rec[0]["events"]);
    CHECK(rec[i]["seed"] != rec[0]["seed"]);
    CHECK(std::abs(rec[i]["blast"]["fraction_violating"].get<double>() -
                   rec[0]["blast"]["fraction_violating"].get<double>()) <= 0.2);
  }
  bool timing_differs = false;
  const auto& m0 = out[0].result->messages;
  const auto& m1 = out[1].result->messages;
  for (std::size_t i = 0; i < std::min(m0.size(), m1.size()); ++i)
    timing_differs = timing_differs || m0[i].deliver_time != m1[i].deliver_time;
  CHECK(timing_differs);
}

TEST_CASE("summary and trajectory output") {
  auto r = run_experiment(build_spec(demo_tec_config("nominal")));
  std::ostringstream csv;
  write_trajectory_csv(csv, r.trajectory);
  std::string header = csv.str().substr(0, csv.str().find('\n'));
  CHECK(header.rfind("t,reactor_temperature_C,", 0) == 0);
  CHECK(header.find("output_yield") != std::string::npos);
  CHECK(header.find("ctrl:CTRL_A") != std::string::npos);

  std::ostringstream table, sc;
  std::vector<SummaryRow> rows{{"nominal", &r, ""}, {"broken", nullptr, "error: x"}};
  write_summary_table(table, rows);
  write_summary_csv(sc, rows);
  const std::string scs = sc.str();
  CHECK(table.str().find("held") != std::string::npos);
  CHECK(std::count(scs.begin(), scs.end(), '\n') == 3);

  std::ostringstream empty;
  write_summary_csv(empty, {});
  const std::string es = empty.str();
  CHECK(std::count(es.begin(), es.end(), '\n') == 1);

  CHECK(exit_code(VerdictKind::Held) == 0);
  CHECK(exit_code(VerdictKind::Disproved) == 2);
  CHECK(exit_code(VerdictKind::Aborted) == 3);
  CHECK(exit_code(VerdictKind::NoSteadyState) == 4);
}
