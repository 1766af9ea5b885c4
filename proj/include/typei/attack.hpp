#pragma once

#include "typei/attack_types.hpp"
#include "typei/style_generator.hpp"
#include "typei/vae.hpp"

namespace typei {

// input_distance >= zeta and output_distance <= xi.
bool check_success(double input_distance, double output_distance, double zeta, double xi);

// Gradient descent on the input image from x0 = x_ori, projecting onto [0, 1]
// after every step. Distances are RMSD: x vs x_ori, reconstruct(x) vs
// reconstruct(x_ori). Stops at the first successful iterate or after
// max_iters steps. Requires the constant scheduler.
AttackResult attack_image_space(const Image& x_ori, const VaeModel& model, const AttackConfig& config);

// Gradient descent on z from z0 = encode-mean(x_ori). The adversarial image
// is decode(z); distances are RMSD of decode(z) vs x_ori and of their
// reconstructions.
AttackResult attack_latent_space(const Image& x_ori, const VaeModel& model, const AttackConfig& config);

// Gradient descent on all L rows of w from w0 = w_ori with the adaptive
// lambda schedule. input_distance is the mean-l1 style distance and success
// requires it to reach epsilon (hinge exactly 0) with output RMSD <= xi.
AttackResult attack_style_space(const StyleVector& w_ori, const StyleGenerator& gen,
                                const AttackConfig& config);

// Trajectory is sampled every iteration up to this many iterations, every 10th beyond.
inline constexpr std::size_t kDenseTrajectoryLimit = 200;

}  // namespace typei
