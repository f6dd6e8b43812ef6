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

// icschaos: run chaos experiments against the simulated control network.
//
//   icschaos demo-tec --scenario router-outage > tec.json
//   icschaos validate tec.json
//   icschaos run tec.json --out results/
//   icschaos sweep tec.json --param /events/0/added_latency_min --values 0,1,5,20

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "icschaos/config.hpp"
#include "icschaos/experiment.hpp"
#include "icschaos/report.hpp"

namespace fs = std::filesystem;
using namespace icschaos;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned parallel = 1;
  std::string format = "json";
  std::string param;
  std::vector<std::string> values;
  std::string scenario = "router-outage";
};

Json load_with_seed(const Options& o) {
  Json cfg = load_config(o.config);
  if (o.seed) cfg["run"]["seed"] = *o.seed;
  return cfg;
}

// Empty items are skipped, so --values "" is an empty sweep.
std::vector<double> parse_values(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& item : items) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("not a number in --values: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

int cmd_validate(const Options& o) {
  const Json cfg = load_with_seed(o);
  const auto errors = validate_config(cfg);
  if (errors.empty()) {
    std::cout << "ok\n";
    return 0;
  }
  for (const auto& e : errors) std::cerr << e << '\n';
  return 1;
}

int cmd_run(const Options& o) {
  const Json cfg = load_with_seed(o);
  const ExperimentSpec spec = build_spec(cfg);
  const ExperimentResult r = run_experiment(spec);
  const std::string name = cfg.value("name", fs::path(o.config).stem().string());
  const Json record = result_record(r, name, config_hash(cfg));
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    open_out(fs::path(o.out) / "result.jsonl") << record.dump() << '\n';
    auto traj = open_out(fs::path(o.out) / "trajectory.csv");
    write_trajectory_csv(traj, r.trajectory);
    auto events = open_out(fs::path(o.out) / "events.jsonl");
    write_event_log(events, r.events);
    auto messages = open_out(fs::path(o.out) / "messages.jsonl");
    write_message_log(messages, r);
  }
  const std::vector<SummaryRow> rows = {{name, &r, ""}};
  if (o.format == "json") std::cout << record.dump() << '\n';
  else if (o.format == "csv") write_summary_csv(std::cout, rows);
  else write_summary_table(std::cout, rows);
  return exit_code(r.verdict.kind);
}

int cmd_sweep(const Options& o) {
  const Json cfg = load_with_seed(o);
  const std::vector<double> values = parse_values(o.values);
  // Check the path even when there is nothing to run.
  if (values.empty()) patch_number(cfg, o.param, 0.0);
  std::vector<Json> configs;
  std::vector<ExperimentSpec> specs;
  for (double v : values) {
    configs.push_back(patch_number(cfg, o.param, v));
    specs.push_back(build_spec(configs.back()));
  }
  const auto outcomes = batch_run(specs, o.parallel);
  std::vector<SummaryRow> rows;
  std::ostringstream records;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    std::ostringstream label;
    label << o.param << "=" << values[i];
    const ExperimentResult* r = outcomes[i].result ? &*outcomes[i].result : nullptr;
    rows.push_back({label.str(), r, outcomes[i].error});
    if (r) records << result_record(*r, label.str(), config_hash(configs[i])).dump() << '\n';
  }
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    open_out(fs::path(o.out) / "sweep.jsonl") << records.str();
    auto summary = open_out(fs::path(o.out) / "summary.csv");
    write_summary_csv(summary, rows);
  }
  if (o.format == "json") {
    for (const auto& row : rows) std::cout << summary_json(row).dump() << '\n';
  } else if (o.format == "csv") {
    write_summary_csv(std::cout, rows);
  } else {
    write_summary_table(std::cout, rows);
  }
  return 0;
}

int cmd_demo(const Options& o) {
  const std::string text = demo_tec_config(o.scenario).dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << text;
  } else {
    open_out(o.out) << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chaos experiments on a simulated networked control system"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", o.config, "Config file")->required();

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("config", o.config, "Config file")->required();

  auto* sweep = app.add_subcommand("sweep", "Run one experiment per value of a numeric parameter");
  sweep->add_option("config", o.config, "Config file")->required();
  sweep->add_option("--param", o.param, "JSON pointer to a numeric config value")->required();
  sweep->add_option("--values", o.values, "Comma-separated values")->delimiter(',')->allow_extra_args(false);
  sweep->add_option("--parallel", o.parallel, "Worker threads")->check(CLI::PositiveNumber);

  for (auto* sub : {validate, run, sweep}) {
    sub->add_option("--seed", o.seed, "Override /run/seed");
  }
  for (auto* sub : {run, sweep}) {
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--format", o.format, "Summary format")
        ->check(CLI::IsMember({"json", "csv", "table"}));
  }
  run->add_option("--parallel", o.parallel, "Accepted for symmetry; a run is single-threaded")
      ->check(CLI::PositiveNumber);

  auto* demo = app.add_subcommand("demo-tec", "Print the built-in TEC surrogate config");
  demo->add_option("--scenario", o.scenario, "Scenario")->check(CLI::IsMember(demo_scenarios()));
  demo->add_option("--out", o.out, "Write to this file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(o);
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*demo) return cmd_demo(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
