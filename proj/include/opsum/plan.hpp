// Copyright 2026 The opsum Authors.
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


#ifndef OPSUM_PLAN_HPP_
#define OPSUM_PLAN_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "opsum/base.hpp"

namespace opsum {

inline bool is_simplex(const Eigen::VectorXd& p, double tol = 1e-6) {
  if (p.size() == 0 || !p.allFinite()) return false;
  if (p.minCoeff() < 0.0) return false;
  return std::abs(p.sum() - 1.0) <= tol;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  return out;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Aspect and sentiment distributions of one review (or an aggregate).
struct ContentPlan {
  Eigen::VectorXd aspect;
  Eigen::VectorXd sentiment;

  bool valid(double tol = 1e-6) const { return is_simplex(aspect, tol) && is_simplex(sentiment, tol); }

  void validate(double tol = 1e-6) const {
    if (!is_simplex(aspect, tol)) throw ValidationError("content plan: p_a is not a distribution");
    if (!is_simplex(sentiment, tol)) throw ValidationError("content plan: p_s is not a distribution");
  }

  json to_json() const { return {{"p_a", vector_to_json(aspect)}, {"p_s", vector_to_json(sentiment)}}; }

  static ContentPlan from_json(const json& j) {
    return {vector_from_json(j.at("p_a")), vector_from_json(j.at("p_s"))};
  }
};

}  // namespace opsum

#endif  // OPSUM_PLAN_HPP_
