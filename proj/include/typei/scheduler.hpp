#pragma once

#include <cstddef>
#include <optional>

#include "typei/attack_types.hpp"

namespace typei {

// Floor below which the output loss is treated as zero when initializing beta.
inline constexpr double kBetaFloor = 1e-8;

struct SchedulerState {
  double lambda = 0.0;
  std::optional<double> beta;  // fixed once set
  std::size_t iteration = 0;
};

// beta = hinge / output_loss; unset (nullopt) while output_loss <= kBetaFloor.
std::optional<double> init_beta(double hinge_loss, double output_loss);

// Self-adaptive weight update:
//   lambda' = lambda + alpha * (beta * output_loss - hinge) + min(hinge - l_hat_w, 0)
// Constant scheduler: lambda' = lambda. With config.clamp_lambda the result
// is clamped at 0. Throws InvalidInput if the adaptive schedule runs without beta.
SchedulerState update_lambda(const SchedulerState& state, double output_loss, double hinge_loss,
                             const AttackConfig& config);

}  // namespace typei
