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

#include "optadapt/chain_model.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "json_util.hpp"
#include "optadapt/errors.hpp"
#include "optadapt/io.hpp"

namespace optadapt {
namespace {

using json = nlohmann::json;
using jsonutil::matrix_to_json;
using jsonutil::parse_matrix;
using jsonutil::parse_vec;
using jsonutil::parse_vec3;
using jsonutil::reject_unknown_fields;
using jsonutil::vec_to_json;

constexpr double kGravity = 9.81;          // m/s^2
constexpr const char* kModelSchema = "optadapt.model/1";

void validate(const ChainModel& model) {
  if (model.n <= 0) throw ValidationError("model needs at least one joint");
  if (static_cast<int>(model.joints.size()) != model.n) {
    throw ValidationError("joints array size does not match n_joints");
  }
  if (!(model.dt > 0.0)) throw ValidationError("dt must be positive");
  for (int j = 0; j < model.n; ++j) {
    const JointSpec& joint = model.joints[j];
    const std::string where = "joint " + std::to_string(j);
    if (std::abs(joint.axis.norm() - 1.0) > 1e-9) {
      throw ValidationError(where + ": axis must be a unit vector");
    }
    if (!(joint.min_pos < joint.max_pos)) {
      throw ValidationError(where + ": min must be strictly below max");
    }
    if (!(joint.velocity_limit > 0.0)) {
      throw ValidationError(where + ": velocity_limit must be positive");
    }
    if (joint.mass < 0.0) {
      throw ValidationError(where + ": mass must be non-negative");
    }
  }
  if (std::abs(model.gravity_axis.norm() - 1.0) > 1e-9) {
    throw ValidationError("gravity_axis must be a unit vector");
  }
  const int m = static_cast<int>(model.B.cols());
  if (model.A.rows() != model.n || model.A.cols() != model.n) {
    throw ValidationError("A must be n x n");
  }
  if (model.B.rows() != model.n || m <= 0) {
    throw ValidationError("B must be n x m with m > 0");
  }
  if (model.G.rows() != m || model.G.cols() != model.n) {
    throw ValidationError("G must be m x n");
  }
  if (model.home_configuration.size() != model.n) {
    throw ValidationError("home_configuration size does not match n_joints");
  }
  for (int j = 0; j < model.n; ++j) {
    const double h = model.home_configuration[j];
    if (h < model.joints[j].min_pos || h > model.joints[j].max_pos) {
      throw ValidationError("home_configuration outside limits at joint " +
                            std::to_string(j));
    }
  }
}

}  // namespace

Vec ChainModel::joint_min() const {
  Vec v(n);
  for (int j = 0; j < n; ++j) v[j] = joints[j].min_pos;
  return v;
}

Vec ChainModel::joint_max() const {
  Vec v(n);
  for (int j = 0; j < n; ++j) v[j] = joints[j].max_pos;
  return v;
}

Vec ChainModel::velocity_limits() const {
  Vec v(n);
  for (int j = 0; j < n; ++j) v[j] = joints[j].velocity_limit;
  return v;
}

void apply_default_dynamics(ChainModel& model) {
  model.A = Mat::Identity(model.n, model.n);
  model.B = model.dt * Mat::Identity(model.n, model.n);
  model.G = (model.A - Mat::Identity(model.n, model.n)) / model.dt;
}

ChainModel load_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("model document must be a JSON object");
  reject_unknown_fields(doc,
                        {"schema", "name", "n_joints", "dt", "gravity_axis", "joints",
                         "A", "B", "G", "home_configuration", "home_pose"},
                        "model document");
  if (!doc.contains("schema") || doc["schema"] != kModelSchema) {
    throw ParseError(std::string("model schema must be \"") + kModelSchema + "\"");
  }
  if (!doc.contains("n_joints") || !doc["n_joints"].is_number_integer()) {
    throw ParseError("model needs integer n_joints");
  }
  if (!doc.contains("joints") || !doc["joints"].is_array()) {
    throw ParseError("model needs a joints array");
  }

  ChainModel model;
  model.name = doc.value("name", std::string{});
  model.n = doc["n_joints"].get<int>();
  model.dt = doc.value("dt", 1e-3);
  if (doc.contains("gravity_axis")) {
    model.gravity_axis = parse_vec3(doc["gravity_axis"], "gravity_axis");
  }

  for (size_t j = 0; j < doc["joints"].size(); ++j) {
    const json& joint_doc = doc["joints"][j];
    const std::string where = "joint " + std::to_string(j);
    if (!joint_doc.is_object()) throw ParseError(where + " must be an object");
    reject_unknown_fields(joint_doc,
                          {"axis", "offset", "min", "max", "velocity_limit", "mass"},
                          where);
    JointSpec joint;
    if (!joint_doc.contains("axis")) throw ParseError(where + " needs an axis");
    joint.axis = parse_vec3(joint_doc["axis"], where + ".axis");
    if (!joint_doc.contains("offset")) throw ParseError(where + " needs an offset");
    joint.offset = parse_vec3(joint_doc["offset"], where + ".offset");
    if (!joint_doc.contains("min") || !joint_doc.contains("max")) {
      throw ParseError(where + " needs min and max limits");
    }
    joint.min_pos = joint_doc["min"].get<double>();
    joint.max_pos = joint_doc["max"].get<double>();
    if (!joint_doc.contains("velocity_limit")) {
      throw ParseError(where + " needs velocity_limit");
    }
    joint.velocity_limit = joint_doc["velocity_limit"].get<double>();
    joint.mass = joint_doc.value("mass", 0.0);
    model.joints.push_back(joint);
  }

  if (doc.contains("A")) {
    model.A = parse_matrix(doc["A"], model.n, "A");
    if (model.A.cols() != model.n) throw ParseError("A must be n x n");
  } else {
    model.A = Mat::Identity(model.n, model.n);
  }
  if (doc.contains("B")) {
    model.B = parse_matrix(doc["B"], model.n, "B");
  } else {
    model.B = model.dt * Mat::Identity(model.n, model.n);
  }
  const int m = static_cast<int>(model.B.cols());
  if (doc.contains("G")) {
    model.G = parse_matrix(doc["G"], m, "G");
  } else {
    model.G = (model.A - Mat::Identity(model.n, model.n)) / model.dt;
  }

  if (doc.contains("home_configuration")) {
    model.home_configuration = parse_vec(doc["home_configuration"], "home_configuration");
  } else {
    model.home_configuration = Vec::Zero(model.n);
  }

  if (doc.contains("home_pose")) {
    const json& pose_doc = doc["home_pose"];
    if (!pose_doc.is_object()) throw ParseError("home_pose must be an object");
    reject_unknown_fields(pose_doc, {"position", "orientation"}, "home_pose");
    Pose pose;
    pose.position = parse_vec3(pose_doc.at("position"), "home_pose.position");
    const Vec q = parse_vec(pose_doc.at("orientation"), "home_pose.orientation");
    if (q.size() != 4) throw ParseError("home_pose.orientation must be [w,x,y,z]");
    pose.orientation = Quat(q[0], q[1], q[2], q[3]);
    model.home_pose = pose;
  }

  validate(model);
  return model;
}

ChainModel load_model_file(const std::string& path) {
  return load_model(read_file(path));
}

std::string serialize_model(const ChainModel& model) {
  json doc;
  doc["schema"] = kModelSchema;
  if (!model.name.empty()) doc["name"] = model.name;
  doc["n_joints"] = model.n;
  doc["dt"] = model.dt;
  doc["gravity_axis"] = {model.gravity_axis[0], model.gravity_axis[1],
                         model.gravity_axis[2]};
  json joints = json::array();
  for (const JointSpec& joint : model.joints) {
    json j;
    j["axis"] = {joint.axis[0], joint.axis[1], joint.axis[2]};
    j["offset"] = {joint.offset[0], joint.offset[1], joint.offset[2]};
    j["min"] = joint.min_pos;
    j["max"] = joint.max_pos;
    j["velocity_limit"] = joint.velocity_limit;
    j["mass"] = joint.mass;
    joints.push_back(j);
  }
  doc["joints"] = joints;
  doc["A"] = matrix_to_json(model.A);
  doc["B"] = matrix_to_json(model.B);
  doc["G"] = matrix_to_json(model.G);
  doc["home_configuration"] = vec_to_json(model.home_configuration);
  if (model.home_pose) {
    json pose;
    pose["position"] = {model.home_pose->position[0], model.home_pose->position[1],
                        model.home_pose->position[2]};
    const Quat& q = model.home_pose->orientation;
    pose["orientation"] = {q.w(), q.x(), q.y(), q.z()};
    doc["home_pose"] = pose;
  }
  return doc.dump(2) + "\n";
}

namespace {

// Shared FK walk: world-frame joint origins, world axes, and link-end
// positions (frame origins after each joint's offset).
struct ChainFrames {
  std::vector<Vec3> joint_origin;  // n
  std::vector<Vec3> axis_world;    // n
  std::vector<Vec3> link_end;      // n
  Eigen::Matrix3d rotation;        // accumulated end-effector rotation
};

ChainFrames walk_chain(const ChainModel& model, const Vec& q) {
  if (q.size() != model.n) {
    throw DimensionError("configuration size " + std::to_string(q.size()) +
                         " does not match n_joints " + std::to_string(model.n));
  }
  ChainFrames frames;
  frames.joint_origin.reserve(model.n);
  frames.axis_world.reserve(model.n);
  frames.link_end.reserve(model.n);
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Vec3 p = Vec3::Zero();
  for (int j = 0; j < model.n; ++j) {
    const JointSpec& joint = model.joints[j];
    frames.joint_origin.push_back(p);
    frames.axis_world.push_back(R * joint.axis);
    R = R * Eigen::AngleAxisd(q[j], joint.axis).toRotationMatrix();
    p = p + R * joint.offset;
    frames.link_end.push_back(p);
  }
  frames.rotation = R;
  return frames;
}

}  // namespace

Pose forward_kinematics(const ChainModel& model, const Vec& q) {
  const ChainFrames frames = walk_chain(model, q);
  Pose pose;
  pose.position = frames.link_end.back();
  pose.orientation = Quat(frames.rotation).normalized();
  if (pose.orientation.w() < 0.0) {
    pose.orientation.coeffs() = -pose.orientation.coeffs();
  }
  return pose;
}

Mat jacobian(const ChainModel& model, const Vec& q) {
  const ChainFrames frames = walk_chain(model, q);
  const Vec3 ee = frames.link_end.back();
  Mat J = Mat::Zero(6, model.n);
  for (int j = 0; j < model.n; ++j) {
    const Vec3 lin = frames.axis_world[j].cross(ee - frames.joint_origin[j]);
    J.block<3, 1>(0, j) = lin;
    J.block<3, 1>(3, j) = frames.axis_world[j];
  }
  return J;
}

Vec inverse_kinematics(const ChainModel& model, const Vec3& goal_position,
                       const Vec& seed, const IkOptions& options) {
  if (seed.size() != model.n) {
    throw DimensionError("IK seed size does not match n_joints");
  }
  Vec lo = options.min_override.size() ? options.min_override : model.joint_min();
  Vec hi = options.max_override.size() ? options.max_override : model.joint_max();
  if (lo.size() != model.n || hi.size() != model.n) {
    throw DimensionError("IK limit override size does not match n_joints");
  }

  Vec q = seed.cwiseMax(lo).cwiseMin(hi);
  // Iterate past the first tolerance hit: near kinematic singularities the
  // iteration converges only linearly in joint space while the position
  // residual is already quadratic-small, so polishing until the iterate is
  // stationary lands much closer to the true configuration. The best iterate
  // by residual is returned. The damping is residual-proportional
  // (Levenberg-Marquardt style) so it regularizes aggressively far from the
  // goal but does not stall the final sharpening near singular solutions.
  Vec best_q = q;
  double best_residual =
      (goal_position - forward_kinematics(model, q).position).norm();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Vec3 residual = goal_position - forward_kinematics(model, q).position;
    const double rnorm = residual.norm();
    if (rnorm < best_residual) {
      best_residual = rnorm;
      best_q = q;
    }
    if (rnorm <= 1e-12) break;  // machine-level convergence
    const double lambda2 = options.damping * rnorm + 1e-30;
    const Mat Jp = jacobian(model, q).topRows(3);
    const Eigen::Matrix3d JJt =
        (Jp * Jp.transpose() + lambda2 * Eigen::Matrix3d::Identity());
    Vec dq = Jp.transpose() * JJt.ldlt().solve(residual);
    // Keep individual steps bounded for stability near singular poses.
    const double max_step = dq.cwiseAbs().maxCoeff();
    if (max_step > 0.2) dq *= 0.2 / max_step;
    const Vec q_next = (q + dq).cwiseMax(lo).cwiseMin(hi);
    const bool stationary = (q_next - q).cwiseAbs().maxCoeff() < 1e-15;
    q = q_next;
    if (stationary) break;  // limits binding or step vanished; no progress left
  }
  const double final_residual =
      (goal_position - forward_kinematics(model, q).position).norm();
  if (final_residual < best_residual) {
    best_residual = final_residual;
    best_q = q;
  }
  if (best_residual <= options.tolerance) return best_q;
  throw UnreachableGoalError(
      "inverse kinematics did not reach the goal: residual " +
      std::to_string(best_residual) + " m after " +
      std::to_string(options.max_iterations) + " iterations");
}

Vec gravity_term(const ChainModel& model, const Vec& q) {
  const ChainFrames frames = walk_chain(model, q);
  const Vec3 g = kGravity * model.gravity_axis;  // force direction on masses
  Vec eta = Vec::Zero(model.n);
  for (int j = 0; j < model.n; ++j) {
    double torque = 0.0;
    for (int k = j; k < model.n; ++k) {
      if (model.joints[k].mass == 0.0) continue;
      const Vec3 lever = frames.link_end[k] - frames.joint_origin[j];
      torque += model.joints[k].mass * g.dot(frames.axis_world[j].cross(lever));
    }
    // Compensation opposes the gravity-generated joint force.
    eta[j] = -torque;
  }
  return eta;
}

}  // namespace optadapt
