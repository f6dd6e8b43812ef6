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

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "icschaos/topology.hpp"

namespace icschaos::net {

/// Counter-based SplitMix64 stream. Draw k (k = 1, 2, ...) is
/// mix(seed + k * 0x9E3779B97F4A7C15) where mix is the SplitMix64 finalizer,
/// so the sequence equals the reference SplitMix64 generator seeded with
/// `seed`. uniform() maps the top 53 bits to [0, 1).
class RngStream {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z);
  /// Child seed for sub-stream `key` (links use their index):
  /// mix(seed ^ mix(key + 0x9E3779B97F4A7C15)).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t key);

  std::uint64_t next_u64() { return mix(seed_ + (++counter_) * kGamma); }
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

enum class Role { Sensor, Controller, Actuator, Historian, Hmi, Router };
enum class Lan { ControlRoom, ProcessOps };

const char* to_string(Role r);
const char* to_string(Lan l);

struct NetNode {
  std::string name;
  Role role = Role::Controller;
  Lan lan = Lan::ControlRoom;
  bool alive = true;
  double slowdown = 1.0;
};

struct LinkParams {
  double base_latency = 0.0;  // minutes
  double jitter = 0.0;        // minutes, scaled by U[0,1)
  double drop_prob = 0.0;
  bool up = true;
};

struct Link {
  NodeId src;
  NodeId dst;
  LinkParams params;
};

struct StateSample {
  NodeId node;  // the measured entity
  double value = 0.0;
  double sample_time = 0.0;
};

struct Command {
  NodeId target;
  double value = 0.0;
};

using Payload = std::variant<StateSample, Command>;

enum class Fate { InFlight, Delivered, Dropped };

struct Message {
  std::uint64_t seq = 0;
  NodeId src;
  NodeId dst;
  Payload payload;
  double send_time = 0.0;
  double deliver_time = 0.0;  // meaningful when delivered or in flight
  Fate fate = Fate::InFlight;
  std::string drop_reason;
};

struct HeldSample {
  double value = 0.0;
  double sample_time = 0.0;
};

/// Additive overlays applied by fault injection. Removing an overlay restores
/// the base parameters exactly because effective values are recomputed from
/// the base each time.
struct LinkFault {
  double added_latency = 0.0;
  double added_drop = 0.0;
};

struct NodeFault {
  bool down = false;
  double slowdown = 1.0;
};

using FaultHandle = std::uint64_t;

/// Deliveries at or before t + kTimeEps count as due at t.
inline constexpr double kTimeEps = 1e-9;

/// Fixed-step network between ICS nodes. Nodes are addressed by NodeId in
/// construction order. Same-LAN traffic uses direct links; cross-LAN traffic
/// must transit the single Router. Routes are static shortest-hop paths with
/// ties broken towards lower node ids.
///
/// Send contract: if any node on the route is down or any link is down the
/// message is dropped with no random draws. Otherwise, for each link in route
/// order, one draw U1 decides loss (U1 < drop_prob); a surviving hop takes a
/// second draw U2 and adds base_latency + jitter * U2. The summed latency is
/// multiplied by the destination's slowdown. Draws come from the link's own
/// stream, seeded with RngStream::derive(seed, link_index).
class Network {
 public:
  Network(std::vector<NetNode> nodes, std::vector<Link> links, std::uint64_t seed);

  std::size_t node_count() const { return nodes_.size(); }
  NodeId id_of(const std::string& name) const;  // throws UnknownTarget
  const NetNode& base_node(NodeId id) const { return nodes_.at(id.slot()); }
  bool alive(NodeId id) const;
  double slowdown(NodeId id) const;
  std::optional<std::size_t> link_index(NodeId src, NodeId dst) const;
  const std::vector<Link>& links() const { return links_; }
  LinkParams effective(std::size_t link_index) const;
  bool crosses_lan(NodeId src, NodeId dst) const;

  /// Node sequence from src to dst inclusive. Throws UnknownRoute.
  const std::vector<NodeId>& route(NodeId src, NodeId dst) const;

  Message send(NodeId src, NodeId dst, Payload payload, double send_time);
  /// Pops every in-flight message due by t, ordered by (deliver_time, seq).
  /// Messages whose route has gone down since sending are dropped instead.
  std::vector<Message> deliver_due(double t);

  std::optional<HeldSample> last_known(NodeId receiver, NodeId source) const;
  std::optional<double> last_command(NodeId actuator) const;

  FaultHandle add_link_fault(std::size_t link_index, LinkFault f);
  FaultHandle add_node_fault(NodeId node, NodeFault f);
  void set_link_up(std::size_t link_index, bool up);
  void remove_fault(FaultHandle h);

  /// Every message sent so far, indexed by seq.
  const std::vector<Message>& log() const { return log_; }
  std::size_t in_flight() const { return queue_.size(); }

 private:
  struct QueueKey {
    double deliver_time;
    std::uint64_t seq;
    friend bool operator<(const QueueKey& a, const QueueKey& b) {
      return a.deliver_time != b.deliver_time ? a.deliver_time < b.deliver_time : a.seq < b.seq;
    }
  };

  std::optional<std::string> route_blocked(const std::vector<NodeId>& path) const;

  std::vector<NetNode> nodes_;
  std::vector<Link> links_;
  std::vector<bool> link_up_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> link_by_ends_;
  std::vector<RngStream> streams_;
  mutable std::map<std::pair<std::size_t, std::size_t>, std::vector<NodeId>> routes_;

  FaultHandle next_handle_ = 1;
  std::map<FaultHandle, std::pair<std::size_t, LinkFault>> link_faults_;
  std::map<FaultHandle, std::pair<std::size_t, NodeFault>> node_faults_;

  std::uint64_t next_seq_ = 0;
  std::set<QueueKey> queue_;
  std::vector<Message> log_;
  std::map<std::pair<std::size_t, std::size_t>, HeldSample> samples_;
  std::map<std::size_t, std::pair<double, double>> commands_;  // value, send_time
};

}  // namespace icschaos::net
