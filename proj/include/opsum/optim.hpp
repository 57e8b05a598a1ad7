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


#ifndef OPSUM_OPTIM_HPP_
#define OPSUM_OPTIM_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "opsum/autograd.hpp"

namespace opsum::ag {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Linear ramp from 0 to lr over this many steps; 0 disables the ramp.
  int warmup_steps = 8000;
  // Global gradient-norm ceiling; <= 0 disables clipping.
  double clip_norm = 3.0;
};

class Adam {
 public:
  Adam(ParameterRefs params, AdamConfig config)
      : params_(std::move(params)), config_(config) {
    for (Parameter* p : params_) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      p->zero_grad();
    }
  }

  int steps() const { return steps_; }

  double current_lr() const {
    if (config_.warmup_steps <= 0) return config_.lr;
    double ramp = static_cast<double>(steps_ + 1) / config_.warmup_steps;
    return config_.lr * std::min(1.0, ramp);
  }

  // Clips, applies one update and clears gradients. Returns the gradient norm
  // measured before clipping.
  double step() {
    double norm = global_grad_norm(params_);
    double factor = 1.0;
    if (config_.clip_norm > 0.0 && norm > config_.clip_norm) factor = config_.clip_norm / norm;
    double lr = current_lr();
    ++steps_;
    double bc1 = 1.0 - std::pow(config_.beta1, steps_);
    double bc2 = 1.0 - std::pow(config_.beta2, steps_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Parameter& p = *params_[i];
      if (p.grad.size() == 0) continue;
      Matrix g = p.grad * factor;
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
      v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
      p.value.array() -=
          lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + config_.eps);
      p.grad.setZero();
    }
    return norm;
  }

  void zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
  }

 private:
  ParameterRefs params_;
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  int steps_ = 0;
};

}  // namespace opsum::ag

#endif  // OPSUM_OPTIM_HPP_
