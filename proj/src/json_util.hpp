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
// JSON parsing helpers shared by the document loaders. Internal to src/.

#ifndef OPTADAPT_SRC_JSON_UTIL_HPP_
#define OPTADAPT_SRC_JSON_UTIL_HPP_

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "optadapt/errors.hpp"
#include "optadapt/types.hpp"

namespace optadapt {
namespace jsonutil {

inline void reject_unknown_fields(const nlohmann::json& object,
                                  const std::set<std::string>& allowed,
                                  const std::string& where) {
  for (const auto& item : object.items()) {
    if (!allowed.count(item.key())) {
      throw ParseError("unknown field \"" + item.key() + "\" in " + where);
    }
  }
}

inline Vec3 parse_vec3(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw ParseError(where + " must be an array of 3 numbers");
  }
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ParseError(where + " must contain numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline Vec parse_vec(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + " must be an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(where + " must contain numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

// Row-major flat array with a known row count; columns inferred.
inline Mat parse_matrix(const nlohmann::json& j, int rows,
                        const std::string& where) {
  const Vec flat = parse_vec(j, where);
  if (rows <= 0 || flat.size() % rows != 0) {
    throw ParseError(where + " must be a row-major array with a multiple of " +
                     std::to_string(rows) + " entries");
  }
  const int cols = static_cast<int>(flat.size()) / rows;
  Mat M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) M(r, c) = flat[r * cols + c];
  }
  return M;
}

// A scalar broadcast to size n, or an array that must be exactly size n.
inline Vec parse_broadcast(const nlohmann::json& j, Eigen::Index n,
                           const std::string& where) {
  if (j.is_number()) return Vec::Constant(n, j.get<double>());
  const Vec v = parse_vec(j, where);
  if (v.size() != n) {
    throw ParseError(where + " must be a scalar or an array of " +
                     std::to_string(n) + " numbers");
  }
  return v;
}

inline nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline nlohmann::json matrix_to_json(const Mat& M) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) out.push_back(M(r, c));
  }
  return out;
}

}  // namespace jsonutil
}  // namespace optadapt

#endif  // OPTADAPT_SRC_JSON_UTIL_HPP_
