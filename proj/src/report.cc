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

#include "icschaos/report.hpp"

#include <cstdio>
#include <iomanip>

namespace icschaos {

int exit_code(VerdictKind k) {
  switch (k) {
    case VerdictKind::Held: return 0;
    case VerdictKind::Disproved: return 2;
    case VerdictKind::Aborted: return 3;
    case VerdictKind::NoSteadyState: return 4;
  }
  return 1;
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

Json result_record(const ExperimentResult& r, const std::string& name, const std::string& config_hash) {
  Json j;
  j["name"] = name;
  j["config_hash"] = config_hash;
  j["seed"] = r.seed;

  Json v;
  v["kind"] = to_string(r.verdict.kind);
  v["reason"] = r.verdict.reason;
  if (r.verdict.kind == VerdictKind::Disproved) {
    v["first_violation_time"] = r.verdict.time;
    v["value"] = r.verdict.value;
    v["max_excursion"] = r.verdict.max_excursion;
  }
  if (r.verdict.kind == VerdictKind::Aborted) v["time"] = r.verdict.time;
  if (r.verdict.abort) {
    v["abort"] = {{"variable", r.verdict.abort->variable},
                  {"value", r.verdict.abort->value},
                  {"limit", r.verdict.abort->limit},
                  {"time", r.verdict.abort->time}};
  }
  j["verdict"] = v;

  if (r.steady) {
    j["steady"] = {{"t_a", r.steady->t_a}, {"t_b", r.steady->t_b}, {"baseline", r.steady->baseline}};
  } else {
    j["steady"] = nullptr;
  }
  j["t_injection"] = r.t_injection;
  j["blast"] = {{"fraction_violating", r.blast.fraction_violating},
                {"violation_integral", r.blast.violation_integral},
                {"shutdown_events", r.blast.shutdown_events},
                {"violating", r.blast.violating}};
  j["dire"] = {{"p_initial", r.dire.p_initial},
               {"p_min", r.dire.p_min},
               {"t_dip", r.dire.t_dip},
               {"t_reentry", optional_number(r.dire.t_reentry)},
               {"t_recover", optional_number(r.dire.t_recover)},
               {"p_final", r.dire.p_final},
               {"restoration_ratio", r.dire.restoration_ratio}};
  j["normal_exceeded"] = r.normal_exceeded;
  if (r.setpoints) {
    j["setpoints"] = {{"u", vector_json(r.setpoints->u)},
                      {"nu", r.setpoints->nu},
                      {"balance_residual", r.setpoints->balance_residual},
                      {"stationarity_residual", r.setpoints->stationarity_residual}};
  }
  if (r.certificate) {
    j["certificate"] = {{"q_h", vector_json(r.certificate->q_h)},
                        {"balance_residual", r.certificate->balance_residual},
                        {"conjugate_residual", r.certificate->conjugate_residual},
                        {"passed", r.certificate->passed}};
  }
  std::size_t delivered = 0, dropped = 0;
  for (const auto& m : r.messages) {
    if (m.fate == net::Fate::Delivered) ++delivered;
    if (m.fate == net::Fate::Dropped) ++dropped;
  }
  j["messages"] = {{"sent", r.messages.size()}, {"delivered", delivered}, {"dropped", dropped}};
  j["events"] = r.events.size();
  j["samples"] = r.trajectory.size();
  return j;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  for (std::size_t c = 0; c < traj.columns.size(); ++c) out << (c ? "," : "") << traj.columns[c];
  out << '\n';
  for (const auto& row : traj.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << fmt(row[c]);
    out << '\n';
  }
}

void write_event_log(std::ostream& out, const std::vector<EventLogEntry>& events) {
  for (const auto& e : events) {
    out << Json{{"t", e.t}, {"action", e.action}, {"index", e.index}, {"type", e.type}}.dump() << '\n';
  }
}

void write_message_log(std::ostream& out, const ExperimentResult& r) {
  auto name = [&](NodeId id) {
    return id.slot() < r.node_names.size() ? r.node_names[id.slot()] : std::to_string(id.index);
  };
  for (const auto& m : r.messages) {
    Json j;
    j["seq"] = m.seq;
    j["src"] = name(m.src);
    j["dst"] = name(m.dst);
    j["kind"] = std::holds_alternative<net::StateSample>(m.payload) ? "sample" : "command";
    j["send_time"] = m.send_time;
    if (m.fate == net::Fate::Delivered) {
      j["deliver_time"] = m.deliver_time;
    } else if (m.fate == net::Fate::Dropped) {
      j["dropped"] = m.drop_reason;
    } else {
      j["in_flight_until"] = m.deliver_time;
    }
    out << j.dump() << '\n';
  }
}

Json summary_json(const SummaryRow& row) {
  Json j;
  j["label"] = row.label;
  if (!row.result) {
    j["verdict"] = "error";
    j["error"] = row.error;
    return j;
  }
  const ExperimentResult& r = *row.result;
  j["verdict"] = to_string(r.verdict.kind);
  j["first_violation_time"] =
      r.verdict.kind == VerdictKind::Disproved ? Json(r.verdict.time) : Json(nullptr);
  j["fraction_violating"] = r.blast.fraction_violating;
  j["violation_integral"] = r.blast.violation_integral;
  j["shutdown_events"] = r.blast.shutdown_events;
  j["p_min"] = r.dire.p_min;
  j["t_dip"] = r.dire.t_dip;
  j["t_recover"] = optional_number(r.dire.t_recover);
  j["restoration_ratio"] = r.dire.restoration_ratio;
  return j;
}

namespace {

const std::vector<std::string> kSummaryColumns = {
    "label",     "verdict", "first_violation_time", "fraction_violating", "violation_integral",
    "shutdown_events", "p_min", "t_dip", "t_recover", "restoration_ratio"};

std::string cell(const Json& j, const std::string& key) {
  if (!j.contains(key) || j[key].is_null()) return "-";
  const Json& v = j[key];
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return fmt(v.get<double>());
  return v.dump();
}

}  // namespace

void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back(kSummaryColumns);
  for (const auto& r : rows) {
    const Json j = summary_json(r);
    std::vector<std::string> line;
    for (const auto& c : kSummaryColumns) line.push_back(cell(j, c));
    cells.push_back(line);
  }
  std::vector<std::size_t> width(kSummaryColumns.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out << (c ? "  " : "") << std::left << std::setw(static_cast<int>(width[c])) << line[c];
    }
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  for (std::size_t c = 0; c < kSummaryColumns.size(); ++c) out << (c ? "," : "") << kSummaryColumns[c];
  out << '\n';
  for (const auto& r : rows) {
    const Json j = summary_json(r);
    for (std::size_t c = 0; c < kSummaryColumns.size(); ++c) out << (c ? "," : "") << cell(j, kSummaryColumns[c]);
    out << '\n';
  }
}

}  // namespace icschaos
