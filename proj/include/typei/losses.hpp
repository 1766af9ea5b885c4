#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "typei/attack_types.hpp"
#include "typei/style_generator.hpp"
#include "typei/vae.hpp"

namespace typei {

// Per-element-normalized distance: mean |a - b| for l1, sqrt(mean (a - b)^2) for l2.
double distance(std::span<const double> a, std::span<const double> b, Norm norm);

// Supplies subgradients where a distance is evaluated exactly at its kink
// (a_i == b_i for l1, a == b for l2). Attacks start at such a kink, and the
// zero subgradient would leave the input-destroying term inert. Draws come
// from a seeded stream so runs stay reproducible.
class KinkBreaker {
 public:
  explicit KinkBreaker(std::uint64_t seed) : rng_(seed) {}
  double sign();
  // Fills `out` with a random direction of Euclidean norm `length`.
  void direction(std::span<double> out, double length);

 private:
  std::mt19937_64 rng_;
};

struct DistanceGradient {
  double value = 0.0;
  std::vector<double> gradient;  // with respect to a
};

// Without a KinkBreaker the subgradient at a kink is 0.
DistanceGradient distance_with_gradient(std::span<const double> a, std::span<const double> b,
                                        Norm norm, KinkBreaker* kinks = nullptr);

template <class Variable>
struct LossGradient {
  double value = 0.0;
  double output_term = 0.0;  // similarity term
  double input_term = 0.0;   // input distance (image space) or hinge value
  double input_distance = 0.0;
  Image adversarial_image;   // x, d(z) or Gs(w)
  Image output;              // reconstruct(x), reconstruct(d(z)) or Gs(w)
  Variable gradient;
};

// L_x = dist(reconstruct(x), x_ori) - lambda * dist(x, x_ori).
double loss_image_space(const Image& x, const Image& x_ori, const VaeModel& model, double lambda,
                        Norm norm);
LossGradient<Image> loss_image_space_gradient(const Image& x, const Image& x_ori,
                                              const VaeModel& model, double lambda, Norm norm,
                                              KinkBreaker* kinks = nullptr);

// Precomputed references of the latent-space loss.
struct LatentReference {
  LatentVector z_ori;         // encode-mean(x_ori)
  Image reconstruction_ori;   // reconstruct(x_ori)

  static LatentReference from(const VaeModel& model, const Image& x_ori);
};

// L_z = dist(reconstruct(decode(z)), reconstruct(x_ori))
//       + lambda * relu(epsilon - dist(z, encode-mean(x_ori))).
double loss_latent_space(const LatentVector& z, const Image& x_ori, const VaeModel& model,
                         double lambda, double epsilon, Norm norm);
LossGradient<LatentVector> loss_latent_space_gradient(const LatentVector& z,
                                                      const LatentReference& ref,
                                                      const VaeModel& model, double lambda,
                                                      double epsilon, Norm norm,
                                                      KinkBreaker* kinks = nullptr);

// L_s = mean |Gs(w) - Gs(w_ori)| + lambda * relu(epsilon - mean |w - w_ori|).
double loss_style_space(const StyleVector& w, const StyleVector& w_ori, const StyleGenerator& gen,
                        double lambda, double epsilon);
LossGradient<StyleVector> loss_style_space_gradient(const StyleVector& w, const StyleVector& w_ori,
                                                    const Image& output_ori,
                                                    const StyleGenerator& gen, double lambda,
                                                    double epsilon, KinkBreaker* kinks = nullptr);

}  // namespace typei
