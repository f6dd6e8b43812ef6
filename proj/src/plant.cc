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

#include "icschaos/plant.hpp"

#include <algorithm>
#include <cmath>

#include "icschaos/errors.hpp"

namespace icschaos {

DisturbanceSignal::DisturbanceSignal(std::size_t dim,
                                     std::vector<std::pair<double, Vector>> breakpoints)
    : dim_(dim), breakpoints_(std::move(breakpoints)) {
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (static_cast<std::size_t>(breakpoints_[i].second.size()) != dim_) {
      throw DimensionMismatch("disturbance breakpoint has wrong dimension");
    }
    if (!std::isfinite(breakpoints_[i].first) ||
        (i > 0 && !(breakpoints_[i].first > breakpoints_[i - 1].first))) {
      throw InvalidArgument("disturbance breakpoint times must be strictly increasing");
    }
  }
}

Vector DisturbanceSignal::at(double t) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t,
                             [](double v, const auto& bp) { return v < bp.first; });
  if (it == breakpoints_.begin()) return Vector::Zero(static_cast<Eigen::Index>(dim_));
  return std::prev(it)->second;
}

DisturbanceSignal DisturbanceSignal::shifted(double offset) const {
  auto moved = breakpoints_;
  for (auto& bp : moved) bp.first += offset;
  return DisturbanceSignal(dim_, std::move(moved));
}

namespace {

std::optional<std::size_t> find_name(const std::vector<VariableInfo>& vars,
                                     const std::string& name) {
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].name == name) return i;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::size_t> PlantModel::state_index(const std::string& name) const {
  return find_name(states, name);
}
std::optional<std::size_t> PlantModel::input_index(const std::string& name) const {
  return find_name(inputs, name);
}
std::optional<std::size_t> PlantModel::output_index(const std::string& name) const {
  return find_name(outputs, name);
}

PlantState step(const PlantModel& model, const PlantState& s, const Vector& u,
                const DisturbanceSignal& delta, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("step size must be positive");
  if (static_cast<std::size_t>(u.size()) != model.m()) {
    throw DimensionMismatch("input vector does not match plant inputs");
  }
  if (!u.allFinite()) throw InvalidArgument("non-finite plant input");
  const Vector d = delta.at(s.t);
  const Vector& x = s.x;
  const Vector k1 = model.drift(x, u, d);
  const Vector k2 = model.drift(x + 0.5 * dt * k1, u, d);
  const Vector k3 = model.drift(x + 0.5 * dt * k2, u, d);
  const Vector k4 = model.drift(x + dt * k3, u, d);
  PlantState next{s.t + dt, x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)};
  if (!next.x.allFinite()) {
    throw NonFiniteState("plant state diverged at t=" + std::to_string(next.t));
  }
  return next;
}

Vector output_deviation(const PlantModel& model, const PlantState& s, const Vector& u,
                        const DisturbanceSignal& delta) {
  return model.output(s.x, u, delta.at(s.t));
}

Vector equilibrium_map(const Vector& u_bar, const EquilibriumParams& p) {
  if (!(p.gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  double total = 0.0;
  for (Eigen::Index i = 0; i < u_bar.size(); ++i) total += u_bar(i);
  const double level = (total - p.d) / p.gamma;
  return Vector::Constant(u_bar.size(), level);
}

ProcessLimits::ProcessLimits(std::map<std::string, Limits> by_name)
    : by_name_(std::move(by_name)) {
  for (const auto& [name, l] : by_name_) {
    auto errs = ordering_errors(name, l);
    if (!errs.empty()) throw InvalidArgument(errs.front());
  }
}

const Limits& ProcessLimits::at(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw UnknownVariable(name);
  return it->second;
}

std::vector<std::string> ProcessLimits::ordering_errors(const std::string& name,
                                                        const Limits& l) {
  const std::pair<const char*, std::optional<double>> chain[] = {
      {"shutdown_low", l.shutdown_low},
      {"normal_low", l.normal_low},
      {"normal_high", l.normal_high},
      {"shutdown_high", l.shutdown_high}};
  std::vector<std::string> errs;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!chain[i].second) continue;
    if (!std::isfinite(*chain[i].second)) {
      errs.push_back(name + "." + chain[i].first + " is not finite");
      continue;
    }
    for (std::size_t j = i + 1; j < 4; ++j) {
      if (chain[j].second && *chain[i].second > *chain[j].second) {
        errs.push_back(name + ": " + chain[i].first + " > " + chain[j].first);
      }
    }
  }
  return errs;
}

const char* to_string(LimitClass c) {
  switch (c) {
    case LimitClass::Normal: return "normal";
    case LimitClass::NormalExceeded: return "normal_exceeded";
    case LimitClass::ShutdownExceeded: return "shutdown_exceeded";
  }
  return "?";
}

LimitClass classify(double value, const Limits& l) {
  if ((l.shutdown_low && value < *l.shutdown_low) ||
      (l.shutdown_high && value > *l.shutdown_high)) {
    return LimitClass::ShutdownExceeded;
  }
  if ((l.normal_low && value < *l.normal_low) || (l.normal_high && value > *l.normal_high)) {
    return LimitClass::NormalExceeded;
  }
  return LimitClass::Normal;
}

std::vector<std::pair<std::string, LimitClass>> check_limits(
    std::span<const std::pair<std::string, double>> sample, const ProcessLimits& limits) {
  std::vector<std::pair<std::string, LimitClass>> out;
  out.reserve(sample.size());
  for (const auto& [name, value] : sample) {
    out.emplace_back(name, classify(value, limits.at(name)));
  }
  return out;
}

KpiSample kpi(std::span<const KpiPoint> window) {
  if (window.size() < 2) throw EmptyWindow("KPI window needs at least two samples");
  const double t0 = window.front().t;
  const double t1 = window.back().t;
  if (!(t1 > t0)) throw EmptyWindow("KPI window has zero length");
  double product = 0.0, feed = 0.0, reactive = 0.0;
  for (std::size_t i = 1; i < window.size(); ++i) {
    const double h = window[i].t - window[i - 1].t;
    const FlowRates& a = window[i - 1].flows;
    const FlowRates& b = window[i].flows;
    product += 0.5 * h * (a.product + b.product);
    feed += 0.5 * h * (a.feed + b.feed);
    reactive += 0.5 * h * (a.reactive_feed + b.reactive_feed);
  }
  KpiSample k;
  k.t_start = t0;
  k.t_end = t1;
  k.throughput_rate = product / (t1 - t0);
  k.input_feed_rate = feed / (t1 - t0);
  k.output_yield = reactive > 0.0 ? std::clamp(product / reactive, 0.0, 1.0) : 0.0;
  return k;
}

StabilityVerdict verify_exponential_stability(const Eigen::MatrixXd& a_cl) {
  if (a_cl.rows() != a_cl.cols() || a_cl.rows() == 0) {
    throw DimensionMismatch("closed-loop matrix must be square and non-empty");
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a_cl, false);
  if (solver.info() != Eigen::Success) {
    throw EigenSolveFailure("closed-loop eigenvalue iteration did not converge");
  }
  const double max_re = solver.eigenvalues().real().maxCoeff();
  return {max_re < -kStabilityMargin, -max_re};
}

PlantModel make_linear_test_plant(std::size_t m) {
  PlantModel p;
  for (std::size_t j = 0; j < m; ++j) {
    const std::string idx = std::to_string(j + 1);
    p.states.push_back({"x" + idx, "1"});
    p.inputs.push_back({"u" + idx, "1"});
    p.outputs.push_back({"y" + idx, "1"});
  }
  p.drift = [](const Vector& x, const Vector& u, const Vector&) -> Vector { return u - x; };
  p.output = [](const Vector& x, const Vector&, const Vector&) -> Vector { return x; };
  p.equilibrium = [](const Vector& u, const Vector&) -> Vector { return u; };
  return p;
}

}  // namespace icschaos
