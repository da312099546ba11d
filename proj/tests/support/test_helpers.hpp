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
//
// Shared fixtures for the unit tests: canonical toy chains, deterministic
// random matrix generators, a finite-difference Jacobian, and a scoped
// temporary directory.

#ifndef OPTADAPT_TESTS_SUPPORT_TEST_HELPERS_HPP_
#define OPTADAPT_TESTS_SUPPORT_TEST_HELPERS_HPP_

#include <filesystem>
#include <random>
#include <string>

#include "optadapt/chain_model.hpp"
#include "optadapt/types.hpp"

namespace optadapt::testing {

inline std::string data_path(const std::string& relative) {
  return std::string(OPTADAPT_DATA_DIR) + "/" + relative;
}

// Planar 2R arm in the x-y plane: two z-axis joints, unit links along x.
// Fully stretched home (2, 0, 0).
inline ChainModel make_two_link() {
  ChainModel m;
  m.name = "planar2r";
  m.n = 2;
  JointSpec j;
  j.axis = Vec3::UnitZ();
  j.offset = Vec3(1.0, 0.0, 0.0);
  j.min_pos = -3.14159265358979323846;
  j.max_pos = 3.14159265358979323846;
  j.velocity_limit = 1.0;
  m.joints = {j, j};
  m.home_configuration = Vec::Zero(2);
  apply_default_dynamics(m);
  return m;
}

// One z-axis joint carrying a unit link along x.
inline ChainModel make_single_z(double mass = 0.0) {
  ChainModel m;
  m.name = "single_z";
  m.n = 1;
  JointSpec j;
  j.axis = Vec3::UnitZ();
  j.offset = Vec3(1.0, 0.0, 0.0);
  j.velocity_limit = 2.0;
  j.mass = mass;
  m.joints = {j};
  m.home_configuration = Vec::Zero(1);
  apply_default_dynamics(m);
  return m;
}

// One y-axis joint carrying a unit link along z: at q = 0 the link points
// straight up, so rotating by q swings it in the x-z plane against gravity.
inline ChainModel make_vertical_pendulum(double mass) {
  ChainModel m;
  m.name = "pendulum";
  m.n = 1;
  JointSpec j;
  j.axis = Vec3::UnitY();
  j.offset = Vec3(0.0, 0.0, 1.0);
  j.velocity_limit = 2.0;
  j.mass = mass;
  m.joints = {j};
  m.home_configuration = Vec::Zero(1);
  apply_default_dynamics(m);
  return m;
}

// n velocity-integrator joints with wide limits; dt configurable.
inline ChainModel make_integrator(int n, double dt = 1e-3,
                                  double limit = 10.0) {
  ChainModel m;
  m.name = "integrator";
  m.n = n;
  m.dt = dt;
  JointSpec j;
  j.axis = Vec3::UnitZ();
  j.offset = Vec3(0.1, 0.0, 0.0);
  j.min_pos = -limit;
  j.max_pos = limit;
  j.velocity_limit = 100.0;
  m.joints.assign(n, j);
  m.home_configuration = Vec::Zero(n);
  apply_default_dynamics(m);
  return m;
}

// Deterministic scalar/matrix draws on top of the standard engine. Test-only:
// reproducibility within one binary is all that matters here.
class TestRng {
 public:
  explicit TestRng(unsigned seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }

  Mat matrix(int rows, int cols, double scale = 1.0) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = scale * uniform(-1.0, 1.0);
    return m;
  }

  Vec vector(int size, double scale = 1.0) {
    Vec v(size);
    for (int i = 0; i < size; ++i) v[i] = scale * uniform(-1.0, 1.0);
    return v;
  }

  // Symmetric positive semidefinite with the given size.
  Mat psd(int size, double scale = 1.0) {
    Mat f = matrix(size, size, scale);
    return f * f.transpose();
  }

  // Symmetric positive definite (eigenvalues >= ridge).
  Mat pd(int size, double scale = 1.0, double ridge = 0.1) {
    return psd(size, scale) + ridge * Mat::Identity(size, size);
  }

  // Exact-rank factor product: rows x cols with rank exactly `rank`
  // (almost surely, with well-separated singular values at these scales).
  Mat with_rank(int rows, int cols, int rank) {
    if (rank == 0) return Mat::Zero(rows, cols);
    return matrix(rows, rank) * matrix(rank, cols);
  }

 private:
  std::mt19937_64 engine_;
};

// Central finite-difference of the forward-kinematics position (3 x n).
inline Mat fd_position_jacobian(const ChainModel& model, const Vec& q,
                                double h = 1e-6) {
  Mat J(3, model.n);
  for (int j = 0; j < model.n; ++j) {
    Vec hi = q, lo = q;
    hi[j] += h;
    lo[j] -= h;
    const Vec3 dp = forward_kinematics(model, hi).position -
                    forward_kinematics(model, lo).position;
    J.col(j) = dp / (2.0 * h);
  }
  return J;
}

// Scoped temporary directory, removed (recursively) on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0;; ++attempt) {
      auto candidate =
          base / ("optadapt_test_" + tag + "_" + std::to_string(attempt));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& relative = "") const {
    return relative.empty() ? path_.string() : (path_ / relative).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace optadapt::testing

#endif  // OPTADAPT_TESTS_SUPPORT_TEST_HELPERS_HPP_
