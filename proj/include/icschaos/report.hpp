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

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "icschaos/config.hpp"
#include "icschaos/experiment.hpp"

namespace icschaos {

/// 0 held, 2 disproved, 3 aborted, 4 no steady state.
int exit_code(VerdictKind k);

/// One JSON record per experiment. Contains no wall-clock data, so identical
/// inputs give identical bytes.
Json result_record(const ExperimentResult& r, const std::string& name, const std::string& config_hash);

/// Header: t, states, inputs, KPIs (when the plant has flows), ctrl:<agent>.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_event_log(std::ostream& out, const std::vector<EventLogEntry>& events);
void write_message_log(std::ostream& out, const ExperimentResult& r);

struct SummaryRow {
  std::string label;
  const ExperimentResult* result = nullptr;  // null when the run failed
  std::string error;
};

Json summary_json(const SummaryRow& row);
void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace icschaos
