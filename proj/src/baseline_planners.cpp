// Copyright 2026 The optadapt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "optadapt/baseline_planners.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "optadapt/errors.hpp"
#include "optadapt/rng.hpp"

namespace optadapt {

namespace {

void check_config(const SamplingPlannerConfig& config) {
  if (config.step_size <= 0.0) {
    throw ValidationError("sampling step_size must be positive");
  }
  if (config.goal_bias < 0.0 || config.goal_bias > 1.0) {
    throw ValidationError("goal_bias must be in [0, 1]");
  }
  // max_samples == 0 is a legal empty budget: the planner reports an
  // immediate planning failure instead of erroring out.
  if (config.max_samples < 0) {
    throw ValidationError("max_samples must be non-negative");
  }
  if (config.goal_tolerance <= 0.0) {
    throw ValidationError("goal_tolerance must be positive");
  }
  if (config.density_resolution <= 0.0) {
    throw ValidationError("density_resolution must be positive");
  }
}

// The start must be valid — a caller error otherwise. An out-of-box goal is
// different: it is unreachable by construction, which the planners report as
// an ordinary planning failure rather than an error.
void check_start(const JointBox& box, const Vec& q_start, const Vec& q_goal) {
  const auto n = box.min.size();
  if (q_start.size() != n || q_goal.size() != n) {
    throw DimensionError("start/goal configuration size does not match the "
                         "joint count");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (q_start[j] < box.min[j] - 1e-12 || q_start[j] > box.max[j] + 1e-12) {
      throw ValidationError("start configuration violates the limit box at "
                            "joint " + std::to_string(j));
    }
  }
}

bool goal_in_box(const JointBox& box, const Vec& q_goal) {
  for (Eigen::Index j = 0; j < box.min.size(); ++j) {
    if (q_goal[j] < box.min[j] - 1e-12 || q_goal[j] > box.max[j] + 1e-12) {
      return false;
    }
  }
  return true;
}

SamplingPlanResult unreachable_goal_failure() {
  SamplingPlanResult failure;
  failure.failure_reason =
      "goal configuration lies outside the joint-limit box";
  failure.nodes = 1;  // only the root was ever valid
  return failure;
}

// Walks parent links from the goal-reaching node back to the root and tacks
// the exact goal on the end so executions terminate on it, not merely within
// tolerance of it.
std::vector<Vec> extract_waypoints(const std::vector<Vec>& nodes,
                                   const std::vector<int>& parent, int leaf,
                                   const Vec& q_goal) {
  std::vector<Vec> waypoints;
  for (int i = leaf; i >= 0; i = parent[i]) waypoints.push_back(nodes[i]);
  std::reverse(waypoints.begin(), waypoints.end());
  if ((waypoints.back() - q_goal).norm() > 0.0) waypoints.push_back(q_goal);
  return waypoints;
}

SamplingPlanResult finish(const ChainModel& model, std::vector<Vec> waypoints,
                          int samples_drawn, int nodes) {
  SamplingPlanResult result;
  result.success = true;
  result.waypoints = std::move(waypoints);
  result.trajectory =
      time_parameterize(result.waypoints, model.velocity_limits(), model.dt);
  result.samples_drawn = samples_drawn;
  result.nodes = nodes;
  return result;
}

}  // namespace

JointBox effective_box(const ChainModel& model, const Vec& min_override,
                       const Vec& max_override) {
  JointBox box;
  box.min = min_override.size() == 0 ? model.joint_min() : min_override;
  box.max = max_override.size() == 0 ? model.joint_max() : max_override;
  if (box.min.size() != model.n || box.max.size() != model.n) {
    throw DimensionError("limit override size does not match the joint count");
  }
  for (Eigen::Index j = 0; j < box.min.size(); ++j) {
    if (!(box.min[j] < box.max[j])) {
      throw ValidationError("limit box must satisfy min < max at joint " +
                            std::to_string(j));
    }
  }
  return box;
}

Trajectory time_parameterize(const std::vector<Vec>& waypoints,
                             const Vec& velocity_limits, double dt) {
  if (waypoints.empty()) {
    throw ValidationError("time parameterization needs at least one waypoint");
  }
  if (dt <= 0.0) throw ValidationError("dt must be positive");
  const auto n = waypoints[0].size();
  if (velocity_limits.size() != n) {
    throw DimensionError("velocity limit size does not match waypoints");
  }
  if (velocity_limits.minCoeff() <= 0.0) {
    throw ValidationError("velocity limits must be positive");
  }

  Trajectory traj;
  traj.dt = dt;
  traj.points.push_back(waypoints[0]);
  for (std::size_t w = 1; w < waypoints.size(); ++w) {
    if (waypoints[w].size() != n) {
      throw DimensionError("waypoint " + std::to_string(w) +
                           " has mismatched dimension");
    }
    const Vec delta = waypoints[w] - waypoints[w - 1];
    // Segment duration at the binding joint, rounded up to whole steps so no
    // per-step move exceeds velocity_limit * dt.
    const double duration =
        (delta.cwiseAbs().cwiseQuotient(velocity_limits)).maxCoeff();
    const int steps = static_cast<int>(std::ceil(duration / dt - 1e-12));
    if (steps <= 0) continue;  // zero-length segment
    for (int k = 1; k <= steps; ++k) {
      traj.points.push_back(waypoints[w - 1] +
                            (static_cast<double>(k) / steps) * delta);
    }
  }
  return traj;
}

SamplingPlanResult rrt_plan(const ChainModel& model, const Vec& q_start,
                            const Vec& q_goal,
                            const SamplingPlannerConfig& config,
                            const Vec& min_override, const Vec& max_override) {
  check_config(config);
  const JointBox box = effective_box(model, min_override, max_override);
  check_start(box, q_start, q_goal);
  if (!goal_in_box(box, q_goal)) return unreachable_goal_failure();

  if ((q_start - q_goal).norm() <= config.goal_tolerance) {
    return finish(model, {q_start, q_goal}, 0, 1);
  }

  Rng rng(config.rng_seed);
  std::vector<Vec> nodes{q_start};
  std::vector<int> parent{-1};

  for (int sample = 1; sample <= config.max_samples; ++sample) {
    const bool toward_goal = rng.uniform() < config.goal_bias;
    const Vec target =
        toward_goal ? q_goal : rng.uniform_vec(box.min, box.max);

    // Nearest node by joint-space Euclidean distance (first index wins ties).
    int nearest = 0;
    double best = (nodes[0] - target).squaredNorm();
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      const double d2 = (nodes[i] - target).squaredNorm();
      if (d2 < best) {
        best = d2;
        nearest = static_cast<int>(i);
      }
    }

    const Vec dir = target - nodes[nearest];
    const double dist = dir.norm();
    if (dist < 1e-12) continue;
    const double step = std::min(1.0, config.step_size / dist);
    // Convex combination of in-box points, so q_new needs no clamping.
    const Vec q_new = nodes[nearest] + step * dir;

    nodes.push_back(q_new);
    parent.push_back(nearest);

    if ((q_new - q_goal).norm() <= config.goal_tolerance) {
      return finish(
          model,
          extract_waypoints(nodes, parent, static_cast<int>(nodes.size()) - 1,
                            q_goal),
          sample, static_cast<int>(nodes.size()));
    }
  }

  SamplingPlanResult failure;
  failure.failure_reason = "sample budget exhausted";
  failure.samples_drawn = config.max_samples;
  failure.nodes = static_cast<int>(nodes.size());
  return failure;
}

SamplingPlanResult est_plan(const ChainModel& model, const Vec& q_start,
                            const Vec& q_goal,
                            const SamplingPlannerConfig& config,
                            const Vec& min_override, const Vec& max_override) {
  check_config(config);
  const JointBox box = effective_box(model, min_override, max_override);
  check_start(box, q_start, q_goal);
  if (!goal_in_box(box, q_goal)) return unreachable_goal_failure();

  if ((q_start - q_goal).norm() <= config.goal_tolerance) {
    return finish(model, {q_start, q_goal}, 0, 1);
  }

  Rng rng(config.rng_seed);
  const auto n = box.min.size();

  // Occupancy grid over the limit box: nodes in crowded buckets are picked
  // less often, pushing the tree into unexplored space.
  const auto bucket_key = [&](const Vec& q) {
    std::vector<std::int64_t> key(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      key[j] = static_cast<std::int64_t>(
          std::floor((q[j] - box.min[j]) / config.density_resolution));
    }
    return key;
  };

  std::vector<Vec> nodes;
  std::vector<int> parent;
  std::map<std::vector<std::int64_t>, int> bucket_id;
  std::vector<int> bucket_count;
  std::vector<int> node_bucket;

  const auto add_node = [&](const Vec& q, int par) {
    nodes.push_back(q);
    parent.push_back(par);
    const auto key = bucket_key(q);
    auto [it, inserted] =
        bucket_id.emplace(key, static_cast<int>(bucket_count.size()));
    if (inserted) bucket_count.push_back(0);
    ++bucket_count[it->second];
    node_bucket.push_back(it->second);
  };

  add_node(q_start, -1);

  for (int sample = 1; sample <= config.max_samples; ++sample) {
    // Pick a node with probability inversely proportional to its bucket's
    // occupancy.
    double total = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      total += 1.0 / bucket_count[node_bucket[i]];
    }
    const double r = rng.uniform() * total;
    int chosen = static_cast<int>(nodes.size()) - 1;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      cumulative += 1.0 / bucket_count[node_bucket[i]];
      if (r < cumulative) {
        chosen = static_cast<int>(i);
        break;
      }
    }

    Vec q_new(n);
    if (rng.uniform() < config.goal_bias) {
      const Vec dir = q_goal - nodes[chosen];
      const double dist = dir.norm();
      if (dist < 1e-12) continue;
      q_new = nodes[chosen] + std::min(1.0, config.step_size / dist) * dir;
    } else {
      for (Eigen::Index j = 0; j < n; ++j) {
        q_new[j] = nodes[chosen][j] + rng.symmetric(config.step_size);
      }
      q_new = q_new.cwiseMax(box.min).cwiseMin(box.max);
    }

    add_node(q_new, chosen);

    if ((q_new - q_goal).norm() <= config.goal_tolerance) {
      return finish(
          model,
          extract_waypoints(nodes, parent, static_cast<int>(nodes.size()) - 1,
                            q_goal),
          sample, static_cast<int>(nodes.size()));
    }
  }

  SamplingPlanResult failure;
  failure.failure_reason = "sample budget exhausted";
  failure.samples_drawn = config.max_samples;
  failure.nodes = static_cast<int>(nodes.size());
  return failure;
}

}  // namespace optadapt
