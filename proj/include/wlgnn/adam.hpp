#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "wlgnn/error.hpp"
#include "wlgnn/matrix.hpp"

namespace wlgnn {

struct AdamConfig {
  double learning_rate = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Moment buffers are created on the first
/// step and matched to parameters by position.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const noexcept { return config_; }
  std::size_t steps() const noexcept { return step_; }

  /// One update of every parameter tensor from its gradient.
  void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads) {
    if (params.size() != grads.size()) throw ShapeError("adam: parameter/gradient count mismatch");
    if (first_.empty()) {
      for (const auto* p : params) {
        first_.emplace_back(p->rows(), p->cols());
        second_.emplace_back(p->rows(), p->cols());
      }
    }
    if (first_.size() != params.size()) throw ShapeError("adam: parameter set changed");
    ++step_;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i]->values();
      const auto& g = grads[i]->values();
      if (!params[i]->same_shape(*grads[i]) || !params[i]->same_shape(first_[i])) {
        throw ShapeError("adam: gradient " + grads[i]->shape_string() + " for parameter " +
                         params[i]->shape_string());
      }
      auto& m = first_[i].values();
      auto& v = second_[i].values();
      for (std::size_t q = 0; q < p.size(); ++q) {
        m[q] = config_.beta1 * m[q] + (1.0 - config_.beta1) * g[q];
        v[q] = config_.beta2 * v[q] + (1.0 - config_.beta2) * g[q] * g[q];
        const double m_hat = m[q] / c1;
        const double v_hat = v[q] / c2;
        p[q] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
    }
  }

 private:
  AdamConfig config_;
  std::size_t step_ = 0;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
};

}  // namespace wlgnn
