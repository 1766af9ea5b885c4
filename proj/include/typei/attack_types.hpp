#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "typei/tensor.hpp"

namespace typei {

enum class AttackMode { image_space, latent_space, style_space };
enum class Norm { l1, l2 };
enum class SchedulerKind { constant, adaptive };

std::string to_string(AttackMode mode);
std::string to_string(Norm norm);
std::string to_string(SchedulerKind kind);
AttackMode parse_attack_mode(const std::string& text);
Norm parse_norm(const std::string& text);
SchedulerKind parse_scheduler(const std::string& text);

// Optimizer and threshold knobs of one attack run.
//
// lambda0: initial weight of the input-destroying term.
// alpha, l_hat_w: rate and output-loss threshold of the adaptive schedule.
// epsilon: hinge threshold on the latent / style distance.
// zeta, xi: success thresholds on input change (>=) and output change (<=).
// eta: gradient step size.
struct AttackConfig {
  AttackMode mode = AttackMode::image_space;
  double lambda0 = 10.0;
  double alpha = 0.05;
  double epsilon = 0.5;
  double zeta = 0.2;
  double xi = 0.1;
  double eta = 0.01;
  std::size_t max_iters = 1000;
  Norm norm = Norm::l2;
  SchedulerKind scheduler = SchedulerKind::constant;
  double l_hat_w = 0.05;
  std::uint64_t seed = 0;
  bool clamp_lambda = true;  // keep lambda >= 0 under the adaptive schedule

  // Mode-specific starting points; see README for the rationale of each value.
  static AttackConfig defaults(AttackMode mode);
  void validate() const;
};

struct TrajectoryPoint {
  std::size_t iteration = 0;
  double input_distance = 0.0;
  double output_distance = 0.0;  // RMSD of outputs
  double output_loss = 0.0;      // optimized output term (configured norm)
  double input_term = 0.0;       // hinge value, or the input distance term for image space
  double lambda = 0.0;
  double deviation = 0.0;        // style mode only, percent
};

using AdversarialVariable = std::variant<Image, LatentVector, StyleVector>;

struct AttackResult {
  AttackMode mode = AttackMode::image_space;
  AdversarialVariable adversarial_variable;
  Image adversarial_image;   // x', d(z_adv) or Gs(w_adv)
  double input_distance = 0.0;
  double output_distance = 0.0;
  std::optional<double> deviation;                  // style mode
  std::vector<double> dimension_change_rates;       // style mode, one per layer row
  bool success = false;
  std::size_t iterations_used = 0;
  double final_lambda = 0.0;
  std::vector<TrajectoryPoint> trajectory;
};

}  // namespace typei
