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

#include <string>
#include <vector>

#include <json.hpp>

#include "icschaos/errors.hpp"
#include "icschaos/experiment.hpp"

namespace icschaos {

using Json = nlohmann::json;

/// Reads and parses a JSON config file. Throws ConfigError on I/O or syntax.
Json load_config(const std::string& path);

/// Every schema and invariant violation, each prefixed with the JSON pointer
/// of the offending value. Empty means the config builds.
std::vector<std::string> validate_config(const Json& cfg);

/// Builds a runnable spec. Throws ConfigError listing all violations; an
/// infeasible setpoint demand surfaces as a violation under /disutilities.
ExperimentSpec build_spec(const Json& cfg);

/// Hex SHA-256 of the canonical (sorted-key, compact) serialization.
std::string config_hash(const Json& cfg);

/// Copy of cfg with the numeric value at `pointer` replaced. Throws
/// ConfigError when the pointer does not address an existing number.
Json patch_number(const Json& cfg, const std::string& pointer, double value);

/// Built-in two-feed TEC surrogate experiment. Scenarios: nominal,
/// disturbance, router-outage, overdrive, latency.
Json demo_tec_config(const std::string& scenario = "router-outage");
const std::vector<std::string>& demo_scenarios();

}  // namespace icschaos
