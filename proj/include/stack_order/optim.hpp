#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stack_order/tensor.hpp"

namespace stack_order {

struct Parameter {
  std::string name;
  Tensor value;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Moment estimates for plain Adam (no weight decay). Moments are created
/// lazily on the first step so the state can be built before parameters
/// are known.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update. grads[i] belongs to params[i]. A
/// non-finite gradient aborts the whole step before anything is modified.
void adam_step(std::span<Parameter> params, std::span<const Tensor> grads, AdamState& state);

/// Mean of -log p over the gold-forward edges of a batch, with p clamped to
/// [eps, 1 - eps]. Because p_ij + p_ji = 1, the backward-edge term
/// -log(1 - p_ji) is the same number and is not summed twice.
double bce_pairwise_loss(std::span<const double> gold_forward_probabilities, double eps = 1e-7);

}  // namespace stack_order
