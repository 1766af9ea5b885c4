#include "typei/attack.hpp"

#include <cmath>

#include "typei/error.hpp"
#include "typei/losses.hpp"
#include "typei/metrics.hpp"
#include "typei/scheduler.hpp"

namespace typei {
namespace {

class TrajectoryRecorder {
 public:
  explicit TrajectoryRecorder(std::size_t max_iters) : dense_(max_iters <= kDenseTrajectoryLimit) {}

  void offer(const TrajectoryPoint& p, bool final) {
    if (dense_ || p.iteration % 10 == 0 || final) points_.push_back(p);
  }
  std::vector<TrajectoryPoint> take() { return std::move(points_); }

 private:
  bool dense_;
  std::vector<TrajectoryPoint> points_;
};

void require_mode(const AttackConfig& config, AttackMode mode) {
  config.validate();
  if (config.mode != mode) {
    throw ConfigError("attack config is for " + to_string(config.mode) + ", not " + to_string(mode));
  }
}

void require_finite(double value, std::size_t iteration) {
  if (!std::isfinite(value)) throw NumericalFailure("attack loss became non-finite", iteration);
}

// Adaptive schedule step shared by the hinge-based attacks: beta is fixed at
// the first iteration with a nonzero output loss; before that the step is
// scheduler-free.
void advance_schedule(SchedulerState& state, double output_loss, double hinge,
                      const AttackConfig& config) {
  if (config.scheduler == SchedulerKind::constant) {
    state = update_lambda(state, output_loss, hinge, config);
    return;
  }
  if (!state.beta) state.beta = init_beta(hinge, output_loss);
  if (state.beta) {
    state = update_lambda(state, output_loss, hinge, config);
  } else {
    ++state.iteration;
  }
}

}  // namespace

bool check_success(double input_distance, double output_distance, double zeta, double xi) {
  return input_distance >= zeta && output_distance <= xi;
}

AttackResult attack_image_space(const Image& x_ori, const VaeModel& model, const AttackConfig& config) {
  require_mode(config, AttackMode::image_space);
  if (x_ori.shape() != model.input_shape()) throw InvalidInput("x_ori does not match the model input shape");
  const Image recon_ori = model.reconstruct(x_ori);
  KinkBreaker kinks(config.seed);
  TrajectoryRecorder recorder(config.max_iters);
  SchedulerState state{config.lambda0, std::nullopt, 0};

  Image x = x_ori;
  AttackResult result;
  result.mode = AttackMode::image_space;
  for (std::size_t k = 0;; ++k) {
    auto eval = loss_image_space_gradient(x, x_ori, model, state.lambda, config.norm, &kinks);
    require_finite(eval.value, k);
    const double in = rmsd(x, x_ori);
    const double out = rmsd(eval.output, recon_ori);
    const bool success = check_success(in, out, config.zeta, config.xi);
    const bool final = success || k == config.max_iters;
    recorder.offer({k, in, out, eval.output_term, eval.input_term, state.lambda, 0.0}, final);
    if (final) {
      result.input_distance = in;
      result.output_distance = out;
      result.success = success;
      result.iterations_used = k;
      result.final_lambda = state.lambda;
      break;
    }
    auto px = x.pixels();
    const auto g = eval.gradient.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] -= config.eta * g[i];
    x.clamp_unit();
    state = update_lambda(state, eval.output_term, eval.input_term, config);
  }
  result.adversarial_image = x;
  result.adversarial_variable = std::move(x);
  result.trajectory = recorder.take();
  return result;
}

AttackResult attack_latent_space(const Image& x_ori, const VaeModel& model, const AttackConfig& config) {
  require_mode(config, AttackMode::latent_space);
  if (x_ori.shape() != model.input_shape()) throw InvalidInput("x_ori does not match the model input shape");
  const LatentReference ref = LatentReference::from(model, x_ori);
  KinkBreaker kinks(config.seed);
  TrajectoryRecorder recorder(config.max_iters);
  SchedulerState state{config.lambda0, std::nullopt, 0};

  LatentVector z = ref.z_ori;
  AttackResult result;
  result.mode = AttackMode::latent_space;
  for (std::size_t k = 0;; ++k) {
    auto eval = loss_latent_space_gradient(z, ref, model, state.lambda, config.epsilon, config.norm, &kinks);
    require_finite(eval.value, k);
    const double in = rmsd(eval.adversarial_image, x_ori);
    const double out = rmsd(eval.output, ref.reconstruction_ori);
    const bool success = check_success(in, out, config.zeta, config.xi);
    const bool final = success || k == config.max_iters;
    recorder.offer({k, in, out, eval.output_term, eval.input_term, state.lambda, 0.0}, final);
    if (final) {
      result.input_distance = in;
      result.output_distance = out;
      result.success = success;
      result.iterations_used = k;
      result.final_lambda = state.lambda;
      result.adversarial_image = std::move(eval.adversarial_image);
      break;
    }
    z.values -= config.eta * eval.gradient.values;
    advance_schedule(state, eval.output_term, eval.input_term, config);
  }
  result.adversarial_variable = std::move(z);
  result.trajectory = recorder.take();
  return result;
}

AttackResult attack_style_space(const StyleVector& w_ori, const StyleGenerator& gen,
                                const AttackConfig& config) {
  require_mode(config, AttackMode::style_space);
  if (!w_ori.all_finite()) throw InvalidInput("w_ori has non-finite entries");
  const Image output_ori = gen.synthesize(w_ori);
  KinkBreaker kinks(config.seed);
  TrajectoryRecorder recorder(config.max_iters);
  SchedulerState state{config.lambda0, std::nullopt, 0};

  const auto safe_deviation = [&w_ori](const StyleVector& w) -> std::optional<double> {
    try {
      return deviation(w, w_ori);
    } catch (const DegenerateReference&) {
      return std::nullopt;
    }
  };

  StyleVector w = w_ori;
  AttackResult result;
  result.mode = AttackMode::style_space;
  for (std::size_t k = 0;; ++k) {
    auto eval = loss_style_space_gradient(w, w_ori, output_ori, gen, state.lambda, config.epsilon, &kinks);
    require_finite(eval.value, k);
    const double out = rmsd(eval.output, output_ori);
    // The hinge is exactly 0 iff the style distance reached epsilon.
    const bool success = eval.input_term == 0.0 && check_success(eval.input_distance, out, config.epsilon, config.xi);
    const bool final = success || k == config.max_iters;
    const auto dev = safe_deviation(w);
    recorder.offer({k, eval.input_distance, out, eval.output_term, eval.input_term, state.lambda,
                    dev.value_or(0.0)},
                   final);
    if (final) {
      result.input_distance = eval.input_distance;
      result.output_distance = out;
      result.deviation = dev;
      result.success = success;
      result.iterations_used = k;
      result.final_lambda = state.lambda;
      result.adversarial_image = std::move(eval.output);
      try {
        result.dimension_change_rates = dimension_change_rates(w, w_ori);
      } catch (const DegenerateReference&) {
      }
      break;
    }
    w.rows -= config.eta * eval.gradient.rows;
    advance_schedule(state, eval.output_term, eval.input_term, config);
  }
  result.adversarial_variable = std::move(w);
  result.trajectory = recorder.take();
  return result;
}

}  // namespace typei
