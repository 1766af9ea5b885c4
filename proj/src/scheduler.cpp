#include "typei/scheduler.hpp"

#include <algorithm>

#include "typei/error.hpp"

namespace typei {

std::optional<double> init_beta(double hinge_loss, double output_loss) {
  if (!(output_loss > kBetaFloor)) return std::nullopt;
  return hinge_loss / std::max(output_loss, kBetaFloor);
}

SchedulerState update_lambda(const SchedulerState& state, double output_loss, double hinge_loss,
                             const AttackConfig& config) {
  SchedulerState next = state;
  ++next.iteration;
  if (config.scheduler == SchedulerKind::constant) return next;
  if (!state.beta) throw InvalidInput("adaptive lambda update requires an initialized beta");
  next.lambda = state.lambda + config.alpha * (*state.beta * output_loss - hinge_loss) +
                std::min(hinge_loss - config.l_hat_w, 0.0);
  if (config.clamp_lambda) next.lambda = std::max(next.lambda, 0.0);
  return next;
}

}  // namespace typei
