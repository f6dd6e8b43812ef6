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

#include "icschaos/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "icschaos/tec_surrogate.hpp"

namespace icschaos {

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string config_hash(const Json& cfg) {
  const std::string text = cfg.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

Json patch_number(const Json& cfg, const std::string& pointer, double value) {
  Json out = cfg;
  Json::json_pointer ptr;
  try {
    ptr = Json::json_pointer(pointer);
  } catch (const Json::exception& e) {
    throw ConfigError("bad parameter path " + pointer + ": " + e.what());
  }
  if (!out.contains(ptr) || !out.at(ptr).is_number()) {
    throw ConfigError("bad parameter path " + pointer + ": no numeric value there");
  }
  Json& slot = out.at(ptr);
  if (slot.is_number_integer() && value == std::floor(value) && value >= 0.0 && value < 1.8e19) {
    slot = static_cast<std::uint64_t>(value);
  } else if (slot.is_number_integer() && value == std::floor(value) && std::abs(value) < 9e18) {
    slot = static_cast<std::int64_t>(value);
  } else {
    slot = value;
  }
  return out;
}

namespace {

std::string escape(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

std::string at(const std::string& path, const std::string& key) { return path + "/" + escape(key); }
std::string at(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

// Collects violations while reading. Accessors return nullopt after recording
// an error so parsing continues and reports as much as it can.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) {
    errors.push_back((path.empty() ? std::string("/") : path) + ": " + msg);
  }

  bool keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [k, v] : obj.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
        fail(at(path, k), "unknown key");
      }
    }
    return true;
  }

  const Json* child(const Json& obj, const char* key, const std::string& path, bool required) {
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) fail(at(path, key), "missing");
      return nullptr;
    }
    return &obj[key];
  }

  std::optional<double> number(const Json& obj, const char* key, const std::string& path,
                               std::optional<double> fallback, bool required = false) {
    const Json* j = child(obj, key, path, required);
    if (!j) return fallback;
    if (j->is_null()) return std::nullopt;
    if (!j->is_number() || !std::isfinite(j->get<double>())) {
      fail(at(path, key), "expected a finite number");
      return std::nullopt;
    }
    return j->get<double>();
  }

  std::optional<double> positive(const Json& obj, const char* key, const std::string& path,
                                 std::optional<double> fallback, bool required = false) {
    auto v = number(obj, key, path, fallback, required);
    if (v && !(*v > 0.0)) {
      fail(at(path, key), "must be positive");
      return std::nullopt;
    }
    return v;
  }

  std::optional<double> nonnegative(const Json& obj, const char* key, const std::string& path,
                                    std::optional<double> fallback) {
    auto v = number(obj, key, path, fallback);
    if (v && !(*v >= 0.0)) {
      fail(at(path, key), "must be >= 0");
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::string> text(const Json& obj, const char* key, const std::string& path,
                                  std::optional<std::string> fallback, bool required = false) {
    const Json* j = child(obj, key, path, required);
    if (!j) return fallback;
    if (!j->is_string()) {
      fail(at(path, key), "expected a string");
      return std::nullopt;
    }
    return j->get<std::string>();
  }

  std::optional<bool> flag(const Json& obj, const char* key, const std::string& path, bool fallback) {
    const Json* j = child(obj, key, path, false);
    if (!j) return fallback;
    if (!j->is_boolean()) {
      fail(at(path, key), "expected true or false");
      return std::nullopt;
    }
    return j->get<bool>();
  }

  const Json* array(const Json& obj, const char* key, const std::string& path, bool required) {
    const Json* j = child(obj, key, path, required);
    if (j && !j->is_array()) {
      fail(at(path, key), "expected an array");
      return nullptr;
    }
    return j;
  }

  const Json* object(const Json& obj, const char* key, const std::string& path, bool required) {
    const Json* j = child(obj, key, path, required);
    if (j && !j->is_object()) {
      fail(at(path, key), "expected an object");
      return nullptr;
    }
    return j;
  }
};

template <typename Fn>
void guarded(Reader& r, const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    r.fail(path, e.what());
  }
}

const std::vector<const char*> kKpis = {"throughput_rate", "input_feed_rate", "output_yield"};

struct TecParamField {
  const char* key;
  double tec::Params::*field;
};

const std::vector<TecParamField>& tec_fields() {
  static const std::vector<TecParamField> f = {
      {"cooling_temp_C", &tec::Params::cooling_temp_C},
      {"cooling_rate_per_min", &tec::Params::cooling_rate_per_min},
      {"design_temp_C", &tec::Params::design_temp_C},
      {"max_yield", &tec::Params::max_yield},
      {"optimal_temp_C", &tec::Params::optimal_temp_C},
      {"yield_width_C", &tec::Params::yield_width_C},
      {"feed_A_kscmh", &tec::Params::feed_A_kscmh},
      {"feed_B_kg_per_h", &tec::Params::feed_B_kg_per_h},
      {"feed_C_kscmh", &tec::Params::feed_C_kscmh},
      {"level_time_constant_min", &tec::Params::level_time_constant_min},
      {"pressure_kPa", &tec::Params::pressure_kPa},
      {"reactor_level_m3", &tec::Params::reactor_level_m3},
      {"separator_level_m3", &tec::Params::separator_level_m3},
      {"stripper_level_m3", &tec::Params::stripper_level_m3},
      {"pressure_gain", &tec::Params::pressure_gain},
      {"level_gain", &tec::Params::level_gain},
  };
  return f;
}

std::optional<net::Role> role_of(const std::string& s) {
  static const std::map<std::string, net::Role> m = {
      {"sensor", net::Role::Sensor},       {"controller", net::Role::Controller},
      {"actuator", net::Role::Actuator},   {"historian", net::Role::Historian},
      {"hmi", net::Role::Hmi},             {"router", net::Role::Router}};
  auto it = m.find(s);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

std::optional<LinkRef> parse_link(const std::string& s) {
  const auto p = s.find("->");
  if (p == std::string::npos || p == 0 || p + 2 >= s.size()) return std::nullopt;
  return LinkRef{s.substr(0, p), s.substr(p + 2)};
}

struct Plant {
  PlantModel model;
  Vector open_loop;
  std::map<std::string, double> initial;
  bool ok = false;
};

Plant read_plant(Reader& r, const Json& cfg) {
  Plant out;
  const std::string path = "/plant";
  const Json* p = r.object(cfg, "plant", "", true);
  if (!p) return out;
  r.keys(*p, path, {"model", "params", "initial_state", "open_loop_inputs", "limits", "disturbance"});
  const auto model = r.text(*p, "model", path, std::nullopt, true);
  if (!model) return out;
  const Json empty = Json::object();
  const Json* params = r.object(*p, "params", path, false);
  if (!params) params = &empty;
  const std::string ppath = at(path, "params");
  if (*model == "tec_surrogate") {
    tec::Params tp;
    for (const auto& [k, v] : params->items()) {
      const auto& f = tec_fields();
      if (std::none_of(f.begin(), f.end(), [&](const TecParamField& x) { return k == x.key; })) {
        r.fail(at(ppath, k), "unknown key");
      }
    }
    for (const auto& f : tec_fields()) {
      if (auto v = r.number(*params, f.key, ppath, tp.*f.field)) tp.*f.field = *v;
    }
    if (!(tp.cooling_rate_per_min > 0.0) || !(tp.level_time_constant_min > 0.0) ||
        !(tp.yield_width_C > 0.0) || !(tp.feed_A_kscmh + tp.feed_C_kscmh > 0.0)) {
      r.fail(ppath, "cooling rate, level time constant, yield width and reactive feed must be positive");
      return out;
    }
    out.model = tec::make_plant(tp);
    out.open_loop = tp.nominal_inputs();
  } else if (*model == "linear_test") {
    r.keys(*params, ppath, {"size"});
    const auto n = r.positive(*params, "size", ppath, std::nullopt, true);
    if (!n) return out;
    if (*n != std::floor(*n) || *n > 1000) {
      r.fail(at(ppath, "size"), "must be an integer in [1, 1000]");
      return out;
    }
    out.model = make_linear_test_plant(static_cast<std::size_t>(*n));
    out.open_loop = Vector::Zero(static_cast<Eigen::Index>(*n));
  } else {
    r.fail(at(path, "model"), "unknown plant model " + *model + " (tec_surrogate or linear_test)");
    return out;
  }

  if (const Json* u = r.object(*p, "open_loop_inputs", path, false)) {
    for (const auto& [k, v] : u->items()) {
      auto idx = out.model.input_index(k);
      if (!idx) {
        r.fail(at(at(path, "open_loop_inputs"), k), "unknown plant input");
      } else if (auto x = r.number(*u, k.c_str(), at(path, "open_loop_inputs"), std::nullopt)) {
        out.open_loop(static_cast<Eigen::Index>(*idx)) = *x;
      }
    }
  }
  if (const Json* x0 = r.object(*p, "initial_state", path, false)) {
    for (const auto& [k, v] : x0->items()) {
      if (!out.model.state_index(k)) {
        r.fail(at(at(path, "initial_state"), k), "unknown state variable");
      } else if (auto x = r.number(*x0, k.c_str(), at(path, "initial_state"), std::nullopt)) {
        out.initial[k] = *x;
      }
    }
  }
  out.ok = true;
  return out;
}

ProcessLimits read_limits(Reader& r, const Json& p, const PlantModel& model) {
  std::map<std::string, Limits> by_name;
  const std::string path = "/plant/limits";
  const Json* lim = r.object(p, "limits", "/plant", false);
  if (!lim) return {};
  for (const auto& [name, entry] : lim->items()) {
    const std::string vpath = at(path, name);
    const bool known = model.state_index(name) || model.input_index(name) ||
                       (model.flows && std::find(kKpis.begin(), kKpis.end(), name) != kKpis.end());
    if (!known) {
      r.fail(vpath, "no state, input or KPI with this name");
      continue;
    }
    if (!r.keys(entry, vpath, {"normal_low", "normal_high", "shutdown_low", "shutdown_high"})) continue;
    Limits l;
    l.normal_low = r.number(entry, "normal_low", vpath, std::nullopt);
    l.normal_high = r.number(entry, "normal_high", vpath, std::nullopt);
    l.shutdown_low = r.number(entry, "shutdown_low", vpath, std::nullopt);
    l.shutdown_high = r.number(entry, "shutdown_high", vpath, std::nullopt);
    const auto bad = ProcessLimits::ordering_errors(name, l);
    for (const auto& e : bad) r.fail(vpath, e);
    if (bad.empty()) by_name[name] = l;
  }
  return ProcessLimits(std::move(by_name));
}

DisturbanceSignal read_disturbance(Reader& r, const Json& p, const PlantModel& model) {
  const std::string path = "/plant/disturbance";
  const Json* d = r.array(p, "disturbance", "/plant", false);
  DisturbanceSignal none(model.disturbance_dim);
  if (!d) return none;
  std::vector<std::pair<double, Vector>> bps;
  for (std::size_t i = 0; i < d->size(); ++i) {
    const Json& e = (*d)[i];
    const std::string epath = at(path, i);
    if (!r.keys(e, epath, {"t_min", "values"})) continue;
    auto t = r.number(e, "t_min", epath, std::nullopt, true);
    if (t && *t < 0.0) r.fail(at(epath, "t_min"), "must be >= 0");
    const Json* vals = r.array(e, "values", epath, true);
    if (!t || !vals) continue;
    if (vals->size() != model.disturbance_dim) {
      r.fail(at(epath, "values"), "expected " + std::to_string(model.disturbance_dim) + " values");
      continue;
    }
    Vector v(static_cast<Eigen::Index>(vals->size()));
    bool good = true;
    for (std::size_t k = 0; k < vals->size(); ++k) {
      if (!(*vals)[k].is_number()) {
        r.fail(at(at(epath, "values"), k), "expected a number");
        good = false;
      } else {
        v(static_cast<Eigen::Index>(k)) = (*vals)[k].get<double>();
      }
    }
    if (good) bps.emplace_back(*t, v);
  }
  DisturbanceSignal out = none;
  guarded(r, path, [&] { out = DisturbanceSignal(model.disturbance_dim, bps); });
  return out;
}

std::optional<ChaosEvent> read_event(Reader& r, const Json& e, const std::string& path,
                                     double* start) {
  const auto type = r.text(e, "type", path, std::nullopt, true);
  if (!type) return std::nullopt;
  auto links = [&](std::vector<LinkRef>& out) {
    const Json* a = r.array(e, "links", path, true);
    if (!a) return;
    for (std::size_t i = 0; i < a->size(); ++i) {
      std::optional<LinkRef> l;
      if ((*a)[i].is_string()) l = parse_link((*a)[i].get<std::string>());
      if (!l) {
        r.fail(at(at(path, "links"), i), "expected \"SRC->DST\"");
      } else {
        out.push_back(*l);
      }
    }
  };
  auto duration = [&](const char* key = "duration_min") {
    return r.positive(e, key, path, std::nullopt, true).value_or(0.0);
  };
  if (auto s = r.number(e, "start_min", path, std::nullopt, true)) {
    if (*s < 0.0) r.fail(at(path, "start_min"), "must be >= 0");
    *start = *s;
  }

  if (*type == "terminate_node") {
    r.keys(e, path, {"type", "start_min", "node", "duration_min"});
    return TerminateNode{r.text(e, "node", path, "", true).value_or(""), duration()};
  }
  if (*type == "overload_node") {
    r.keys(e, path, {"type", "start_min", "node", "slowdown", "duration_min"});
    OverloadNode o{r.text(e, "node", path, "", true).value_or(""),
                   r.number(e, "slowdown", path, std::nullopt, true).value_or(1.0), duration()};
    if (!(o.slowdown >= 1.0)) r.fail(at(path, "slowdown"), "must be >= 1");
    return o;
  }
  if (*type == "inject_latency") {
    r.keys(e, path, {"type", "start_min", "links", "added_latency_min", "duration_min"});
    InjectLatency l;
    links(l.links);
    l.added_latency = r.nonnegative(e, "added_latency_min", path, std::nullopt).value_or(0.0);
    if (!e.contains("added_latency_min")) r.fail(at(path, "added_latency_min"), "missing");
    l.duration = duration();
    return l;
  }
  if (*type == "inject_network_error") {
    r.keys(e, path, {"type", "start_min", "links", "drop_prob", "duration_min"});
    InjectNetworkError n;
    links(n.links);
    n.drop_prob = r.number(e, "drop_prob", path, std::nullopt, true).value_or(0.0);
    if (!(n.drop_prob >= 0.0 && n.drop_prob <= 1.0)) r.fail(at(path, "drop_prob"), "must be in [0, 1]");
    n.duration = duration();
    return n;
  }
  if (*type == "subnet_unavailable") {
    r.keys(e, path, {"type", "start_min", "duration_min"});
    return SubnetUnavailable{duration()};
  }
  if (*type == "restart_plc") {
    r.keys(e, path, {"type", "start_min", "node", "downtime_min", "checkpoint"});
    return RestartPlc{r.text(e, "node", path, "", true).value_or(""), duration("downtime_min"),
                      r.flag(e, "checkpoint", path, false).value_or(false)};
  }
  if (*type == "fail_sensor") {
    r.keys(e, path, {"type", "start_min", "node", "mode", "bias", "duration_min"});
    FailSensor f;
    f.node = r.text(e, "node", path, "", true).value_or("");
    const std::string mode = r.text(e, "mode", path, "stuck_at_last").value_or("stuck_at_last");
    if (mode == "stuck_at_last") f.mode = SensorFailure::StuckAtLast;
    else if (mode == "bias") f.mode = SensorFailure::Bias;
    else if (mode == "silence") f.mode = SensorFailure::Silence;
    else r.fail(at(path, "mode"), "expected stuck_at_last, bias or silence");
    f.bias = r.number(e, "bias", path, 0.0).value_or(0.0);
    if (f.mode == SensorFailure::Bias && !e.contains("bias")) r.fail(at(path, "bias"), "missing");
    f.duration = duration();
    return f;
  }
  if (*type == "input_step3") {
    r.keys(e, path, {"type", "start_min", "input", "delta", "window_min"});
    return InputStep{r.text(e, "input", path, "", true).value_or(""),
                     r.number(e, "delta", path, std::nullopt, true).value_or(0.0),
                     r.positive(e, "window_min", path, 1440.0).value_or(1440.0)};
  }
  if (*type == "input_prbs") {
    r.keys(e, path, {"type", "start_min", "input", "delta", "register_bits", "state", "clock_min",
                     "duration_min"});
    InputPrbs p;
    p.input = r.text(e, "input", path, "", true).value_or("");
    p.delta = r.number(e, "delta", path, std::nullopt, true).value_or(0.0);
    const double k = r.number(e, "register_bits", path, 10.0).value_or(10.0);
    const double st = r.number(e, "state", path, 1.0).value_or(1.0);
    if (k != std::floor(k) || k < 2 || k > 24) {
      r.fail(at(path, "register_bits"), "must be an integer in [2, 24]");
    } else if (st != std::floor(st) || st < 1 || st >= std::ldexp(1.0, static_cast<int>(k))) {
      r.fail(at(path, "state"), "must be a non-zero integer below 2^register_bits");
    } else {
      p.k = static_cast<unsigned>(k);
      p.state = static_cast<std::uint32_t>(st);
    }
    p.clock = r.positive(e, "clock_min", path, 1.0).value_or(1.0);
    p.duration = duration();
    return p;
  }
  r.fail(at(path, "type"), "unknown event type " + *type);
  return std::nullopt;
}

// Checks that names used by an event exist in the built loop.
void check_event_targets(Reader& r, const ChaosEvent& ev, const std::string& path,
                         const LoopSetup& setup) {
  const net::Network* net = setup.network ? &*setup.network : nullptr;
  auto has_node = [&](const std::string& n) {
    if (net) {
      for (std::size_t i = 0; i < net->node_count(); ++i) {
        if (net->base_node(NodeId::from_slot(i)).name == n) return true;
      }
      return false;
    }
    return std::any_of(setup.wiring.begin(), setup.wiring.end(),
                       [&](const LoopAgent& a) { return a.name == n; });
  };
  auto is_agent = [&](const std::string& n) {
    return std::any_of(setup.wiring.begin(), setup.wiring.end(),
                       [&](const LoopAgent& a) { return a.name == n; });
  };
  auto check_links = [&](const std::vector<LinkRef>& links) {
    if (!net) {
      r.fail(path, "link events need a network section");
      return;
    }
    for (std::size_t i = 0; i < links.size(); ++i) {
      try {
        if (!net->link_index(net->id_of(links[i].src), net->id_of(links[i].dst))) {
          r.fail(at(at(path, "links"), i), "no such link");
        }
      } catch (const UnknownTarget&) {
        r.fail(at(at(path, "links"), i), "unknown node");
      }
    }
  };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TerminateNode>) {
          if (!has_node(v.node)) r.fail(at(path, "node"), "unknown node " + v.node);
        } else if constexpr (std::is_same_v<T, OverloadNode>) {
          if (!net) r.fail(path, "overload_node needs a network section");
          else if (!has_node(v.node)) r.fail(at(path, "node"), "unknown node " + v.node);
        } else if constexpr (std::is_same_v<T, InjectLatency> || std::is_same_v<T, InjectNetworkError>) {
          check_links(v.links);
        } else if constexpr (std::is_same_v<T, SubnetUnavailable>) {
          if (!net) r.fail(path, "subnet_unavailable needs a network section");
        } else if constexpr (std::is_same_v<T, RestartPlc>) {
          if (!is_agent(v.node)) r.fail(at(path, "node"), "not a controller agent: " + v.node);
        } else if constexpr (std::is_same_v<T, FailSensor>) {
          if (std::none_of(setup.sensors.begin(), setup.sensors.end(),
                           [&](const LoopSensor& s) { return s.name == v.node; })) {
            r.fail(at(path, "node"), "not a declared sensor: " + v.node);
          }
        } else {
          if (!setup.plant.input_index(v.input)) r.fail(at(path, "input"), "unknown plant input " + v.input);
        }
      },
      ev);
}

}  // namespace

ExperimentSpec build_spec(const Json& cfg) {
  Reader r;
  if (!cfg.is_object()) throw ConfigError("/: config must be a JSON object");
  r.keys(cfg, "", {"name", "description", "topology", "plant", "agents", "network", "disutilities",
                   "steady_state", "hypothesis", "events", "guard", "run"});
  ExperimentSpec spec;
  const Json empty = Json::object();

  // run
  const Json* run = r.object(cfg, "run", "", true);
  if (!run) run = &empty;
  r.keys(*run, "/run", {"duration_min", "dt_min", "sample_period_min", "seed", "settle_limit_min"});
  spec.duration = r.positive(*run, "duration_min", "/run", std::nullopt, true).value_or(0.0);
  spec.setup.dt = r.positive(*run, "dt_min", "/run", 0.05).value_or(0.05);
  spec.setup.sample_period = r.positive(*run, "sample_period_min", "/run", 1.0).value_or(1.0);
  spec.settle_limit = r.positive(*run, "settle_limit_min", "/run", 600.0).value_or(600.0);
  if (run->contains("seed")) {
    const Json& s = (*run)["seed"];
    if (s.is_number_unsigned()) spec.seed = s.get<std::uint64_t>();
    else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) spec.seed = s.get<std::uint64_t>();
    else r.fail("/run/seed", "expected a non-negative integer");
  }

  // plant
  Plant plant = read_plant(r, cfg);
  const Json* pj = cfg.contains("plant") && cfg["plant"].is_object() ? &cfg["plant"] : &empty;
  if (plant.ok) {
    spec.guard.limits = read_limits(r, *pj, plant.model);
    spec.setup.disturbance = read_disturbance(r, *pj, plant.model);
    spec.setup.plant = plant.model;
    spec.setup.nominal_input = plant.open_loop;
  }

  // topology
  std::vector<net::NetNode> nodes;
  std::map<std::string, std::size_t> node_index;
  const Json* topo = r.object(cfg, "topology", "", true);
  if (!topo) topo = &empty;
  r.keys(*topo, "/topology", {"nodes", "edges"});
  if (const Json* ns = r.array(*topo, "nodes", "/topology", true)) {
    for (std::size_t i = 0; i < ns->size(); ++i) {
      const Json& n = (*ns)[i];
      const std::string npath = at("/topology/nodes", i);
      if (!r.keys(n, npath, {"name", "role", "lan"})) continue;
      net::NetNode node;
      node.name = r.text(n, "name", npath, std::nullopt, true).value_or("");
      const std::string role = r.text(n, "role", npath, "controller").value_or("controller");
      const std::string lan = r.text(n, "lan", npath, "control_room").value_or("control_room");
      if (auto ro = role_of(role)) node.role = *ro;
      else r.fail(at(npath, "role"), "unknown role " + role);
      if (lan == "control_room") node.lan = net::Lan::ControlRoom;
      else if (lan == "process_ops") node.lan = net::Lan::ProcessOps;
      else r.fail(at(npath, "lan"), "expected control_room or process_ops");
      if (node.name.empty()) continue;
      if (!node_index.emplace(node.name, nodes.size()).second) {
        r.fail(at(npath, "name"), "duplicate node " + node.name);
        continue;
      }
      nodes.push_back(node);
    }
  }

  // agents
  std::map<std::string, std::size_t> agent_index;
  std::vector<std::optional<double>> agent_C, agent_u0;
  std::vector<double> agent_beta;
  const Json* agents = r.array(cfg, "agents", "", true);
  if (agents && agents->empty()) r.fail("/agents", "needs at least one agent");
  if (agents) {
    for (std::size_t i = 0; i < agents->size(); ++i) {
      const Json& a = (*agents)[i];
      const std::string apath = at("/agents", i);
      if (!r.keys(a, apath, {"node", "input", "measure", "sensor", "actuator", "beta", "C", "u0"})) continue;
      LoopAgent w;
      w.name = r.text(a, "node", apath, std::nullopt, true).value_or("");
      if (!w.name.empty() && !node_index.count(w.name)) r.fail(at(apath, "node"), "unknown topology node " + w.name);
      if (!w.name.empty() && !agent_index.emplace(w.name, spec.setup.wiring.size()).second) {
        r.fail(at(apath, "node"), "node already hosts an agent");
      }
      if (auto in = r.text(a, "input", apath, std::nullopt, true); in && plant.ok) {
        if (auto idx = plant.model.input_index(*in)) w.input = *idx;
        else r.fail(at(apath, "input"), "unknown plant input " + *in);
      }
      if (auto out = r.text(a, "measure", apath, std::nullopt, true); out && plant.ok) {
        if (auto idx = plant.model.output_index(*out)) w.output = *idx;
        else r.fail(at(apath, "measure"), "unknown plant output " + *out);
      }
      w.sensor = r.text(a, "sensor", apath, std::nullopt);
      w.actuator = r.text(a, "actuator", apath, std::nullopt);
      for (const auto* ref : {&w.sensor, &w.actuator}) {
        if (*ref && !node_index.count(**ref)) r.fail(apath, "unknown topology node " + **ref);
      }
      agent_beta.push_back(r.number(a, "beta", apath, 0.0).value_or(0.0));
      auto c = r.number(a, "C", apath, std::nullopt);
      if (c && *c < 0.0) r.fail(at(apath, "C"), "must be >= 0");
      agent_C.push_back(c);
      agent_u0.push_back(r.number(a, "u0", apath, std::nullopt));
      spec.setup.wiring.push_back(w);
    }
  }
  const std::size_t m = spec.setup.wiring.size();

  std::vector<WeightedEdge> edges;
  if (const Json* es = r.array(*topo, "edges", "/topology", false)) {
    for (std::size_t i = 0; i < es->size(); ++i) {
      const Json& e = (*es)[i];
      const std::string epath = at("/topology/edges", i);
      if (!r.keys(e, epath, {"from", "to", "weight"})) continue;
      const auto from = r.text(e, "from", epath, std::nullopt, true);
      const auto to = r.text(e, "to", epath, std::nullopt, true);
      const auto w = r.positive(e, "weight", epath, 1.0);
      if (!from || !to || !w) continue;
      if (!agent_index.count(*from)) { r.fail(at(epath, "from"), "not an agent node: " + *from); continue; }
      if (!agent_index.count(*to)) { r.fail(at(epath, "to"), "not an agent node: " + *to); continue; }
      edges.push_back({NodeId::from_slot(agent_index[*from]), NodeId::from_slot(agent_index[*to]), *w});
    }
  }
  if (m > 0) {
    guarded(r, "/topology/edges", [&] { spec.setup.topology = Topology(m, edges); });
  }

  // disutilities (solved before the agents so u0 can default to the optimum)
  if (const Json* dj = r.object(cfg, "disutilities", "", false)) {
    r.keys(*dj, "/disutilities", {"demand", "gamma", "output_weights", "items"});
    const auto demand = r.number(*dj, "demand", "/disutilities", std::nullopt, true);
    const auto gamma = r.positive(*dj, "gamma", "/disutilities", 1.0);
    std::vector<Disutility> z;
    Vector D = Vector::Ones(static_cast<Eigen::Index>(m));
    if (const Json* ow = r.array(*dj, "output_weights", "/disutilities", false)) {
      if (ow->size() != m) {
        r.fail("/disutilities/output_weights", "expected one weight per agent");
      } else {
        for (std::size_t i = 0; i < m; ++i) {
          if (!(*ow)[i].is_number() || !((*ow)[i].get<double>() >= 0.0)) {
            r.fail(at("/disutilities/output_weights", i), "expected a number >= 0");
          } else {
            D(static_cast<Eigen::Index>(i)) = (*ow)[i].get<double>();
          }
        }
      }
    }
    if (const Json* items = r.array(*dj, "items", "/disutilities", true)) {
      if (items->size() != m) r.fail("/disutilities/items", "expected one entry per agent");
      for (std::size_t i = 0; i < items->size(); ++i) {
        const Json& it = (*items)[i];
        const std::string ipath = at("/disutilities/items", i);
        if (!r.keys(it, ipath, {"reference", "alpha", "low", "high", "mu"})) continue;
        Disutility d;
        d.reference = r.number(it, "reference", ipath, 0.0).value_or(0.0);
        d.alpha = r.positive(it, "alpha", ipath, 1.0).value_or(1.0);
        d.low = r.number(it, "low", ipath, -kInf).value_or(-kInf);
        d.high = r.number(it, "high", ipath, kInf).value_or(kInf);
        d.mu = r.nonnegative(it, "mu", ipath, 1e-6).value_or(1e-6);
        guarded(r, ipath, [&] { d.validate(); });
        z.push_back(d);
      }
    }
    if (demand && gamma && z.size() == m && m > 0 && r.errors.empty()) {
      try {
        spec.setpoints = solve_setpoints(z, *demand);
        spec.certificate = verify_optimality(spec.setup.topology, D, *spec.setpoints,
                                             EquilibriumParams{*gamma, *demand}, z);
      } catch (const Infeasible& e) {
        r.fail("/disutilities/demand", e.what());
      } catch (const ConditionViolated& e) {
        r.fail("/disutilities", e.what());
      } catch (const std::exception& e) {
        r.fail("/disutilities", e.what());
      }
    }
  }

  if (plant.ok && r.errors.empty()) {
    std::vector<double> u0(m);
    for (std::size_t j = 0; j < m; ++j) {
      if (agent_u0[j]) u0[j] = *agent_u0[j];
      else if (spec.setpoints) u0[j] = spec.setpoints->u(static_cast<Eigen::Index>(j));
      else u0[j] = plant.open_loop(static_cast<Eigen::Index>(spec.setup.wiring[j].input));
    }
    spec.setup.agents = make_agents(spec.setup.topology, u0);
    for (std::size_t j = 0; j < m; ++j) {
      spec.setup.agents[j].beta = agent_beta[j];
      if (agent_C[j]) spec.setup.agents[j].C = *agent_C[j];
    }
    Vector u = plant.open_loop;
    for (std::size_t j = 0; j < m; ++j) u(static_cast<Eigen::Index>(spec.setup.wiring[j].input)) = u0[j];
    const Vector d0 = Vector::Zero(static_cast<Eigen::Index>(plant.model.disturbance_dim));
    spec.setup.x0 = plant.model.equilibrium ? plant.model.equilibrium(u, d0)
                                           : Vector::Zero(static_cast<Eigen::Index>(plant.model.n()));
    for (const auto& [k, v] : plant.initial) {
      spec.setup.x0(static_cast<Eigen::Index>(*plant.model.state_index(k))) = v;
    }
  }

  // network
  if (const Json* nj = r.object(cfg, "network", "", false)) {
    r.keys(*nj, "/network", {"links", "sensors", "sensor_period_min", "control_period_min"});
    spec.setup.sensor_period = r.positive(*nj, "sensor_period_min", "/network", 0.0).value_or(0.0);
    spec.setup.control_period = r.positive(*nj, "control_period_min", "/network", 0.0).value_or(0.0);
    std::vector<net::Link> links;
    if (const Json* ls = r.array(*nj, "links", "/network", true)) {
      for (std::size_t i = 0; i < ls->size(); ++i) {
        const Json& l = (*ls)[i];
        const std::string lpath = at("/network/links", i);
        if (!r.keys(l, lpath, {"src", "dst", "latency_min", "jitter_min", "drop_prob", "up"})) continue;
        const auto src = r.text(l, "src", lpath, std::nullopt, true);
        const auto dst = r.text(l, "dst", lpath, std::nullopt, true);
        net::LinkParams p;
        p.base_latency = r.nonnegative(l, "latency_min", lpath, 0.0).value_or(0.0);
        p.jitter = r.nonnegative(l, "jitter_min", lpath, 0.0).value_or(0.0);
        p.drop_prob = r.number(l, "drop_prob", lpath, 0.0).value_or(0.0);
        if (!(p.drop_prob >= 0.0 && p.drop_prob <= 1.0)) r.fail(at(lpath, "drop_prob"), "must be in [0, 1]");
        p.up = r.flag(l, "up", lpath, true).value_or(true);
        if (!src || !dst) continue;
        if (!node_index.count(*src)) { r.fail(at(lpath, "src"), "unknown node " + *src); continue; }
        if (!node_index.count(*dst)) { r.fail(at(lpath, "dst"), "unknown node " + *dst); continue; }
        links.push_back({NodeId::from_slot(node_index[*src]), NodeId::from_slot(node_index[*dst]), p});
      }
    }
    if (const Json* ss = r.array(*nj, "sensors", "/network", false)) {
      for (std::size_t i = 0; i < ss->size(); ++i) {
        const Json& s = (*ss)[i];
        const std::string spath = at("/network/sensors", i);
        if (!r.keys(s, spath, {"node", "measure", "observers"})) continue;
        LoopSensor sensor;
        sensor.name = r.text(s, "node", spath, std::nullopt, true).value_or("");
        if (!sensor.name.empty() && !node_index.count(sensor.name)) {
          r.fail(at(spath, "node"), "unknown node " + sensor.name);
        }
        if (auto out = r.text(s, "measure", spath, std::nullopt, true); out && plant.ok) {
          if (auto idx = plant.model.output_index(*out)) sensor.output = *idx;
          else r.fail(at(spath, "measure"), "unknown plant output " + *out);
        }
        if (const Json* obs = r.array(s, "observers", spath, false)) {
          for (std::size_t k = 0; k < obs->size(); ++k) {
            if (!(*obs)[k].is_string() || !node_index.count((*obs)[k].get<std::string>())) {
              r.fail(at(at(spath, "observers"), k), "expected a known node name");
            } else {
              sensor.observers.push_back((*obs)[k].get<std::string>());
            }
          }
        }
        spec.setup.sensors.push_back(sensor);
      }
    }
    if (r.errors.empty()) {
      guarded(r, "/network", [&] { spec.setup.network.emplace(nodes, links, spec.seed); });
    }
  }

  // steady state and hypothesis
  if (const Json* s = r.object(cfg, "steady_state", "", true)) {
    r.keys(*s, "/steady_state", {"metric", "window_min", "band", "hold_min"});
    spec.steady.metric = r.text(*s, "metric", "/steady_state", std::nullopt, true).value_or("");
    spec.steady.window = r.positive(*s, "window_min", "/steady_state", 30.0).value_or(30.0);
    spec.steady.band = r.positive(*s, "band", "/steady_state", std::nullopt, true).value_or(1.0);
    spec.steady.hold = r.positive(*s, "hold_min", "/steady_state", spec.steady.window).value_or(30.0);
    if (spec.steady.hold < spec.steady.window) r.fail("/steady_state/hold_min", "must be >= window_min");
  }
  if (const Json* h = r.object(cfg, "hypothesis", "", true)) {
    r.keys(*h, "/hypothesis", {"metric", "band", "horizon_min"});
    spec.hypothesis.metric = r.text(*h, "metric", "/hypothesis", std::nullopt, true).value_or("");
    spec.hypothesis.horizon = r.positive(*h, "horizon_min", "/hypothesis", std::nullopt, true).value_or(0.0);
    const Json* band = r.array(*h, "band", "/hypothesis", true);
    if (band) {
      if (band->size() != 2 || !(*band)[0].is_number() || !(*band)[1].is_number()) {
        r.fail("/hypothesis/band", "expected [lo, hi]");
      } else {
        spec.hypothesis.lo = (*band)[0].get<double>();
        spec.hypothesis.hi = (*band)[1].get<double>();
        if (!(spec.hypothesis.lo < spec.hypothesis.hi)) r.fail("/hypothesis/band", "needs lo < hi");
      }
    }
    if (spec.hypothesis.horizon > spec.duration) {
      r.fail("/hypothesis/horizon_min", "exceeds /run/duration_min");
    }
  }
  if (plant.ok) {
    std::set<std::string> columns;
    for (const auto& v : plant.model.states) columns.insert(v.name);
    for (const auto& v : plant.model.inputs) columns.insert(v.name);
    if (plant.model.flows) columns.insert(kKpis.begin(), kKpis.end());
    for (const auto& w : spec.setup.wiring) columns.insert("ctrl:" + w.name);
    if (!spec.steady.metric.empty() && !columns.count(spec.steady.metric)) {
      r.fail("/steady_state/metric", "unknown metric " + spec.steady.metric);
    }
    if (!spec.hypothesis.metric.empty() && !columns.count(spec.hypothesis.metric)) {
      r.fail("/hypothesis/metric", "unknown metric " + spec.hypothesis.metric);
    }
  }

  // events
  std::vector<ScheduledEvent> events;
  if (const Json* es = r.array(cfg, "events", "", false)) {
    for (std::size_t i = 0; i < es->size(); ++i) {
      const std::string epath = at("/events", i);
      if (!(*es)[i].is_object()) {
        r.fail(epath, "expected an object");
        continue;
      }
      double start = 0.0;
      if (auto ev = read_event(r, (*es)[i], epath, &start)) {
        if (r.errors.empty()) check_event_targets(r, *ev, epath, spec.setup);
        events.push_back({start, *ev});
      }
    }
  }
  if (r.errors.empty()) guarded(r, "/events", [&] { spec.schedule = EventSchedule(events); });

  if (const Json* g = r.object(cfg, "guard", "", false)) {
    r.keys(*g, "/guard", {"enabled"});
    spec.guard.enabled = r.flag(*g, "enabled", "/guard", true).value_or(true);
  }

  // Final structural check: a loop must construct from the spec.
  if (r.errors.empty()) {
    guarded(r, "", [&] {
      spec.validate();
      ClosedLoop probe(spec.setup);
    });
  }
  if (!r.errors.empty()) {
    std::string msg;
    for (const auto& e : r.errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ConfigError(msg);
  }
  return spec;
}

std::vector<std::string> validate_config(const Json& cfg) {
  try {
    build_spec(cfg);
  } catch (const ConfigError& e) {
    std::string text = e.what();
    const std::string prefix = "ConfigError: ";
    if (text.rfind(prefix, 0) == 0) text = text.substr(prefix.size());
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
  }
  return {};
}

const std::vector<std::string>& demo_scenarios() {
  static const std::vector<std::string> s = {"nominal", "disturbance", "router-outage", "overdrive",
                                             "latency"};
  return s;
}

Json demo_tec_config(const std::string& scenario) {
  if (std::find(demo_scenarios().begin(), demo_scenarios().end(), scenario) == demo_scenarios().end()) {
    throw ConfigError("unknown demo scenario " + scenario);
  }
  const tec::Params p;
  Json cfg;
  cfg["name"] = "tec-" + scenario;

  auto node = [](const char* name, const char* role, const char* lan) {
    return Json{{"name", name}, {"role", role}, {"lan", lan}};
  };
  cfg["topology"]["nodes"] = Json::array({
      node("CTRL_A", "controller", "control_room"), node("CTRL_C", "controller", "control_room"),
      node("HIST", "historian", "control_room"),    node("HMI", "hmi", "control_room"),
      node("R1", "router", "control_room"),         node("TT1", "sensor", "process_ops"),
      node("FV_A", "actuator", "process_ops"),      node("FV_C", "actuator", "process_ops"),
  });
  cfg["topology"]["edges"] = Json::array({
      {{"from", "CTRL_A"}, {"to", "CTRL_C"}, {"weight", 0.002}},
      {{"from", "CTRL_C"}, {"to", "CTRL_A"}, {"weight", 0.002}},
  });

  Json plant;
  plant["model"] = "tec_surrogate";
  plant["params"] = Json::object();
  for (const auto& f : tec_fields()) plant["params"][f.key] = p.*f.field;
  plant["open_loop_inputs"] = {{"feed_A_kscmh", p.feed_A_kscmh},
                               {"feed_B_kg_per_h", p.feed_B_kg_per_h},
                               {"feed_C_kscmh", p.feed_C_kscmh}};
  Json limits = Json::object();
  const ProcessLimits table = tec::table_limits();
  for (const auto& [name, l] : table.all()) {
    Json e = Json::object();
    if (l.normal_low) e["normal_low"] = *l.normal_low;
    if (l.normal_high) e["normal_high"] = *l.normal_high;
    if (l.shutdown_low) e["shutdown_low"] = *l.shutdown_low;
    if (l.shutdown_high) e["shutdown_high"] = *l.shutdown_high;
    limits[name] = e;
  }
  limits["output_yield"] = {{"normal_low", 0.90}, {"normal_high", 1.0}};
  plant["limits"] = limits;
  if (scenario != "nominal") {
    // Cooling water warms by 12 degC after injection: over an hour, or over
    // 12 minutes for the latency scenario so that feedback delay matters.
    const double step_min = scenario == "latency" ? 1.0 : 5.0;
    Json ramp = Json::array();
    for (int k = 1; k <= 12; ++k) {
      ramp.push_back({{"t_min", step_min * (k - 1)}, {"values", Json::array({static_cast<double>(k)})}});
    }
    plant["disturbance"] = ramp;
  }
  cfg["plant"] = plant;

  cfg["agents"] = Json::array({
      {{"node", "CTRL_A"}, {"input", "feed_A_kscmh"}, {"measure", "temperature_dev_C"},
       {"sensor", "TT1"}, {"actuator", "FV_A"}, {"beta", 0.0}, {"C", 0.0022}, {"u0", p.feed_A_kscmh}},
      {{"node", "CTRL_C"}, {"input", "feed_C_kscmh"}, {"measure", "temperature_dev_C"},
       {"sensor", "TT1"}, {"actuator", "FV_C"}, {"beta", 0.0}, {"C", 0.0072}, {"u0", p.feed_C_kscmh}},
  });

  auto link = [](const char* src, const char* dst, double latency) {
    return Json{{"src", src}, {"dst", dst}, {"latency_min", latency}, {"jitter_min", 0.01},
                {"drop_prob", 0.001}};
  };
  cfg["network"]["links"] = Json::array({
      link("TT1", "R1", 0.01),    link("R1", "CTRL_A", 0.01), link("R1", "CTRL_C", 0.01),
      link("CTRL_A", "CTRL_C", 0.005), link("CTRL_C", "CTRL_A", 0.005),
      link("CTRL_A", "R1", 0.01), link("CTRL_C", "R1", 0.01), link("R1", "FV_A", 0.01),
      link("R1", "FV_C", 0.01),   link("R1", "HIST", 0.01),   link("R1", "HMI", 0.01),
  });
  cfg["network"]["sensors"] = Json::array(
      {{{"node", "TT1"}, {"measure", "temperature_dev_C"}, {"observers", Json::array({"HIST", "HMI"})}}});
  cfg["network"]["sensor_period_min"] = 1.0;
  cfg["network"]["control_period_min"] = 1.0;

  cfg["disutilities"] = {
      {"demand", p.feed_A_kscmh + p.feed_C_kscmh},
      {"gamma", 1.0},
      {"items", Json::array({
                    {{"reference", p.feed_A_kscmh}, {"alpha", 1.0}, {"low", 0.0}, {"high", 1.0}, {"mu", 1e-6}},
                    {{"reference", p.feed_C_kscmh}, {"alpha", 1.0}, {"low", 0.0}, {"high", 20.0}, {"mu", 1e-6}},
                })},
  };
  cfg["steady_state"] = {{"metric", "output_yield"}, {"window_min", 30.0}, {"band", 0.005}, {"hold_min", 30.0}};
  cfg["hypothesis"] = {{"metric", "output_yield"}, {"band", Json::array({0.90, 1.0})}, {"horizon_min", 480.0}};

  Json events = Json::array();
  if (scenario == "router-outage") {
    events.push_back({{"type", "subnet_unavailable"}, {"start_min", 0.0}, {"duration_min", 120.0}});
  } else if (scenario == "overdrive") {
    events.push_back({{"type", "fail_sensor"}, {"start_min", 0.0}, {"node", "TT1"}, {"mode", "bias"},
                      {"bias", -60.0}, {"duration_min", 240.0}});
  } else if (scenario == "latency") {
    events.push_back({{"type", "inject_latency"}, {"start_min", 0.0},
                      {"links", Json::array({"TT1->R1"})}, {"added_latency_min", 5.0},
                      {"duration_min", 120.0}});
  }
  cfg["events"] = events;
  cfg["guard"] = {{"enabled", true}};
  cfg["run"] = {{"duration_min", 480.0}, {"dt_min", 0.05}, {"sample_period_min", 1.0},
                {"seed", 42}, {"settle_limit_min", 600.0}};
  return cfg;
}

}  // namespace icschaos
