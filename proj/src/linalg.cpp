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

#include <Eigen/SVD>

#include "optadapt/lq_optimizer.hpp"

namespace optadapt {

Mat pseudoinverse(const Mat& M, double rel_tol) {
  if (M.rows() == 0 || M.cols() == 0) {
    return Mat::Zero(M.cols(), M.rows());
  }
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double sigma_max = sv.size() ? sv[0] : 0.0;
  if (sigma_max <= 0.0) {
    return Mat::Zero(M.cols(), M.rows());
  }
  const double cutoff = rel_tol * sigma_max;
  Vec inv = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) inv[i] = 1.0 / sv[i];
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Mat nullspace_basis(const Mat& M, double rel_tol) {
  const Eigen::Index cols = M.cols();
  if (M.rows() == 0 || cols == 0) {
    return Mat::Identity(cols, cols);
  }
  // Full V is needed: the kernel lives in the trailing right singular
  // vectors, which the thin decomposition drops for wide matrices.
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  const double sigma_max = sv.size() ? sv[0] : 0.0;
  Eigen::Index rank = 0;
  if (sigma_max > 0.0) {
    const double cutoff = rel_tol * sigma_max;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv[i] > cutoff) ++rank;
    }
  }
  return svd.matrixV().rightCols(cols - rank);
}

}  // namespace optadapt
