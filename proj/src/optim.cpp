#include "stack_order/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stack_order {

void adam_step(std::span<Parameter> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(params.size()) + " parameters but " +
                                std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].value.shape()) {
      throw std::invalid_argument("adam_step: gradient shape " + shape_string(grads[i].shape()) +
                                  " does not match parameter '" + params[i].name + "' " +
                                  shape_string(params[i].value.shape()));
    }
    if (!grads[i].all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient for parameter '" + params[i].name + "'");
    }
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.value.shape());
      state.second_moment.emplace_back(p.value.shape());
    }
  } else if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                                " parameters, got " + std::to_string(params.size()));
  }

  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    Tensor& p = params[i].value;
    const Tensor& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

double bce_pairwise_loss(std::span<const double> gold_forward_probabilities, double eps) {
  if (gold_forward_probabilities.empty()) throw std::invalid_argument("bce_pairwise_loss: empty edge set");
  double total = 0.0;
  for (double p : gold_forward_probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bce_pairwise_loss: probability outside [0, 1]");
    total += -std::log(std::clamp(p, eps, 1.0 - eps));
  }
  return total / static_cast<double>(gold_forward_probabilities.size());
}

}  // namespace stack_order
