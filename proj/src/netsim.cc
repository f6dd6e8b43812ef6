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

#include "icschaos/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "icschaos/errors.hpp"

namespace icschaos::net {

std::uint64_t RngStream::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t RngStream::derive(std::uint64_t seed, std::uint64_t key) {
  return mix(seed ^ mix(key + kGamma));
}

const char* to_string(Role r) {
  switch (r) {
    case Role::Sensor: return "sensor";
    case Role::Controller: return "controller";
    case Role::Actuator: return "actuator";
    case Role::Historian: return "historian";
    case Role::Hmi: return "hmi";
    case Role::Router: return "router";
  }
  return "?";
}

const char* to_string(Lan l) {
  return l == Lan::ControlRoom ? "control_room" : "process_ops";
}

Network::Network(std::vector<NetNode> nodes, std::vector<Link> links, std::uint64_t seed)
    : nodes_(std::move(nodes)), links_(std::move(links)) {
  if (nodes_.empty()) throw InvalidArgument("network needs nodes");
  const auto routers = std::count_if(nodes_.begin(), nodes_.end(),
                                     [](const NetNode& n) { return n.role == Role::Router; });
  if (routers != 1) throw InvalidArgument("network needs exactly one router");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!(nodes_[i].slowdown >= 1.0)) throw InvalidArgument("slowdown must be >= 1");
    for (std::size_t j = 0; j < i; ++j) {
      if (nodes_[i].name == nodes_[j].name) throw InvalidArgument("duplicate node " + nodes_[i].name);
    }
  }
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    if (l.src.index < 1 || l.src.index > nodes_.size() || l.dst.index < 1 ||
        l.dst.index > nodes_.size() || l.src == l.dst) {
      throw InvalidArgument("link endpoints invalid");
    }
    const LinkParams& p = l.params;
    if (!(p.base_latency >= 0.0) || !std::isfinite(p.base_latency) || !(p.jitter >= 0.0) ||
        !std::isfinite(p.jitter) || !(p.drop_prob >= 0.0 && p.drop_prob <= 1.0)) {
      throw InvalidArgument("link parameters out of range");
    }
    const NetNode& a = nodes_[l.src.slot()];
    const NetNode& b = nodes_[l.dst.slot()];
    if (a.lan != b.lan && a.role != Role::Router && b.role != Role::Router) {
      throw InvalidArgument("link " + a.name + "->" + b.name + " crosses LANs without the router");
    }
    if (!link_by_ends_.emplace(std::make_pair(l.src.slot(), l.dst.slot()), i).second) {
      throw InvalidArgument("duplicate link " + a.name + "->" + b.name);
    }
    link_up_.push_back(p.up);
    streams_.emplace_back(RngStream::derive(seed, i));
  }
}

NodeId Network::id_of(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return NodeId::from_slot(i);
  }
  throw UnknownTarget("no network node named " + name);
}

bool Network::alive(NodeId id) const {
  if (!nodes_.at(id.slot()).alive) return false;
  for (const auto& [h, f] : node_faults_) {
    if (f.first == id.slot() && f.second.down) return false;
  }
  return true;
}

double Network::slowdown(NodeId id) const {
  double s = nodes_.at(id.slot()).slowdown;
  for (const auto& [h, f] : node_faults_) {
    if (f.first == id.slot()) s = std::max(s, f.second.slowdown);
  }
  return s;
}

std::optional<std::size_t> Network::link_index(NodeId src, NodeId dst) const {
  auto it = link_by_ends_.find({src.slot(), dst.slot()});
  if (it == link_by_ends_.end()) return std::nullopt;
  return it->second;
}

LinkParams Network::effective(std::size_t link_index) const {
  LinkParams p = links_.at(link_index).params;
  p.up = link_up_[link_index];
  double drop = p.drop_prob;
  for (const auto& [h, f] : link_faults_) {
    if (f.first != link_index) continue;
    p.base_latency += f.second.added_latency;
    drop += f.second.added_drop;
  }
  p.drop_prob = std::clamp(drop, 0.0, 1.0);
  return p;
}

bool Network::crosses_lan(NodeId src, NodeId dst) const {
  return nodes_.at(src.slot()).lan != nodes_.at(dst.slot()).lan;
}

const std::vector<NodeId>& Network::route(NodeId src, NodeId dst) const {
  const auto key = std::make_pair(src.slot(), dst.slot());
  if (auto it = routes_.find(key); it != routes_.end()) return it->second;
  if (src.slot() >= nodes_.size() || dst.slot() >= nodes_.size()) {
    throw UnknownRoute("node out of range");
  }

  // BFS over links; the adjacency is scanned in node order so ties resolve
  // towards lower ids.
  const std::size_t n = nodes_.size();
  std::vector<std::size_t> parent(n, n);
  std::deque<std::size_t> frontier{src.slot()};
  parent[src.slot()] = src.slot();
  while (!frontier.empty() && parent[dst.slot()] == n) {
    const std::size_t a = frontier.front();
    frontier.pop_front();
    for (std::size_t b = 0; b < n; ++b) {
      if (parent[b] == n && link_by_ends_.count({a, b})) {
        parent[b] = a;
        frontier.push_back(b);
      }
    }
  }
  if (parent[dst.slot()] == n) {
    throw UnknownRoute(nodes_[src.slot()].name + " -> " + nodes_[dst.slot()].name);
  }
  std::vector<NodeId> path;
  for (std::size_t v = dst.slot(); v != src.slot(); v = parent[v]) path.push_back(NodeId::from_slot(v));
  path.push_back(src);
  std::reverse(path.begin(), path.end());
  return routes_.emplace(key, std::move(path)).first->second;
}

std::optional<std::string> Network::route_blocked(const std::vector<NodeId>& path) const {
  for (NodeId v : path) {
    if (!alive(v)) return "node " + nodes_[v.slot()].name + " down";
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!link_up_[*link_index(path[i], path[i + 1])]) {
      return "link " + nodes_[path[i].slot()].name + "->" + nodes_[path[i + 1].slot()].name + " down";
    }
  }
  return std::nullopt;
}

Message Network::send(NodeId src, NodeId dst, Payload payload, double send_time) {
  const std::vector<NodeId>& path = route(src, dst);
  Message msg;
  msg.seq = next_seq_++;
  msg.src = src;
  msg.dst = dst;
  msg.payload = std::move(payload);
  msg.send_time = send_time;

  if (auto blocked = route_blocked(path)) {
    msg.fate = Fate::Dropped;
    msg.drop_reason = *blocked;
  } else {
    double latency = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const std::size_t li = *link_index(path[i], path[i + 1]);
      const LinkParams p = effective(li);
      RngStream& rng = streams_[li];
      if (rng.uniform() < p.drop_prob) {
        msg.fate = Fate::Dropped;
        msg.drop_reason = "lost on " + nodes_[path[i].slot()].name + "->" +
                          nodes_[path[i + 1].slot()].name;
        break;
      }
      latency += p.base_latency + p.jitter * rng.uniform();
    }
    if (msg.fate != Fate::Dropped) {
      msg.deliver_time = send_time + latency * slowdown(dst);
      queue_.insert({msg.deliver_time, msg.seq});
    }
  }
  log_.push_back(msg);
  return msg;
}

std::vector<Message> Network::deliver_due(double t) {
  std::vector<Message> out;
  while (!queue_.empty() && queue_.begin()->deliver_time <= t + kTimeEps) {
    const QueueKey key = *queue_.begin();
    queue_.erase(queue_.begin());
    Message& msg = log_[key.seq];
    if (auto blocked = route_blocked(route(msg.src, msg.dst))) {
      msg.fate = Fate::Dropped;
      msg.drop_reason = *blocked + " (in flight)";
      continue;
    }
    msg.fate = Fate::Delivered;
    if (const auto* s = std::get_if<StateSample>(&msg.payload)) {
      auto [it, fresh] = samples_.try_emplace({msg.dst.slot(), s->node.slot()},
                                              HeldSample{s->value, s->sample_time});
      if (!fresh && s->sample_time >= it->second.sample_time) {
        it->second = {s->value, s->sample_time};
      }
    } else if (const auto* c = std::get_if<Command>(&msg.payload)) {
      auto [it, fresh] = commands_.try_emplace(msg.dst.slot(), c->value, msg.send_time);
      if (!fresh && msg.send_time >= it->second.second) it->second = {c->value, msg.send_time};
    }
    out.push_back(msg);
  }
  return out;
}

std::optional<HeldSample> Network::last_known(NodeId receiver, NodeId source) const {
  auto it = samples_.find({receiver.slot(), source.slot()});
  if (it == samples_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> Network::last_command(NodeId actuator) const {
  auto it = commands_.find(actuator.slot());
  if (it == commands_.end()) return std::nullopt;
  return it->second.first;
}

FaultHandle Network::add_link_fault(std::size_t link_index, LinkFault f) {
  if (link_index >= links_.size()) throw UnknownTarget("link index out of range");
  const FaultHandle h = next_handle_++;
  link_faults_.emplace(h, std::make_pair(link_index, f));
  return h;
}

FaultHandle Network::add_node_fault(NodeId node, NodeFault f) {
  if (node.slot() >= nodes_.size()) throw UnknownTarget("node out of range");
  if (!(f.slowdown >= 1.0)) throw InvalidArgument("slowdown must be >= 1");
  const FaultHandle h = next_handle_++;
  node_faults_.emplace(h, std::make_pair(node.slot(), f));
  return h;
}

void Network::set_link_up(std::size_t link_index, bool up) { link_up_.at(link_index) = up; }

void Network::remove_fault(FaultHandle h) {
  if (!link_faults_.erase(h) && !node_faults_.erase(h)) {
    throw UnknownTarget("no active fault with handle " + std::to_string(h));
  }
}

}  // namespace icschaos::net
