#include "typei/losses.hpp"

#include <algorithm>
#include <cmath>

#include "typei/error.hpp"

namespace typei {
namespace {

std::span<const double> as_span(const LatentVector& z) {
  return {z.values.data(), static_cast<std::size_t>(z.values.size())};
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0)) throw InvalidInput(std::string(what) + " must be positive");
}

}  // namespace

double KinkBreaker::sign() { return (rng_() & 1U) ? 1.0 : -1.0; }

void KinkBreaker::direction(std::span<double> out, double length) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : out) {
      v = normal(rng_);
      norm += v * v;
    }
  } while (norm == 0.0);
  const double scale = length / std::sqrt(norm);
  for (double& v : out) v *= scale;
}

double distance(std::span<const double> a, std::span<const double> b, Norm norm) {
  if (a.size() != b.size()) throw InvalidInput("distance: size mismatch");
  if (a.empty()) throw InvalidInput("distance of empty arrays");
  double sum = 0.0;
  if (norm == Norm::l1) {
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum / static_cast<double>(a.size());
  }
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum / static_cast<double>(a.size()));
}

DistanceGradient distance_with_gradient(std::span<const double> a, std::span<const double> b,
                                        Norm norm, KinkBreaker* kinks) {
  DistanceGradient out{distance(a, b, norm), std::vector<double>(a.size(), 0.0)};
  const double n = static_cast<double>(a.size());
  if (norm == Norm::l1) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      if (d > 0.0) out.gradient[i] = 1.0 / n;
      else if (d < 0.0) out.gradient[i] = -1.0 / n;
      else if (kinks) out.gradient[i] = kinks->sign() / n;
    }
  } else if (out.value > 0.0) {
    const double scale = 1.0 / (n * out.value);
    for (std::size_t i = 0; i < a.size(); ++i) out.gradient[i] = (a[i] - b[i]) * scale;
  } else if (kinks) {
    // Any vector of norm <= 1/sqrt(n) is a subgradient of the RMS at 0.
    kinks->direction(out.gradient, 1.0 / std::sqrt(n));
  }
  return out;
}

// ---------------------------------------------------------------- image space

LossGradient<Image> loss_image_space_gradient(const Image& x, const Image& x_ori,
                                              const VaeModel& model, double lambda, Norm norm,
                                              KinkBreaker* kinks) {
  if (x.shape() != x_ori.shape()) throw InvalidInput("x and x_ori differ in shape");
  auto recon = model.reconstruct_with_pullback(x);
  const auto out_term = distance_with_gradient(recon.value.pixels(), x_ori.pixels(), norm);
  const auto in_term = distance_with_gradient(x.pixels(), x_ori.pixels(), norm, kinks);

  LossGradient<Image> r;
  r.output_term = out_term.value;
  r.input_term = in_term.value;
  r.input_distance = in_term.value;
  r.value = out_term.value - lambda * in_term.value;
  r.gradient = recon.backward(Image(x.shape(), out_term.gradient));
  auto g = r.gradient.pixels();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= lambda * in_term.gradient[i];
  r.adversarial_image = x;
  r.output = std::move(recon.value);
  return r;
}

double loss_image_space(const Image& x, const Image& x_ori, const VaeModel& model, double lambda,
                        Norm norm) {
  if (x.shape() != x_ori.shape()) throw InvalidInput("x and x_ori differ in shape");
  return distance(model.reconstruct(x).pixels(), x_ori.pixels(), norm) -
         lambda * distance(x.pixels(), x_ori.pixels(), norm);
}

// ---------------------------------------------------------------- latent space

LatentReference LatentReference::from(const VaeModel& model, const Image& x_ori) {
  return {LatentVector{model.encode(x_ori).mean}, model.reconstruct(x_ori)};
}

double loss_latent_space(const LatentVector& z, const Image& x_ori, const VaeModel& model,
                         double lambda, double epsilon, Norm norm) {
  require_positive(epsilon, "epsilon");
  const LatentReference ref = LatentReference::from(model, x_ori);
  if (z.dim() != ref.z_ori.dim()) throw InvalidInput("latent dimension mismatch");
  const Image out = model.reconstruct(model.decode(z));
  const double hinge = std::max(epsilon - distance(as_span(z), as_span(ref.z_ori), norm), 0.0);
  return distance(out.pixels(), ref.reconstruction_ori.pixels(), norm) + lambda * hinge;
}

LossGradient<LatentVector> loss_latent_space_gradient(const LatentVector& z,
                                                      const LatentReference& ref,
                                                      const VaeModel& model, double lambda,
                                                      double epsilon, Norm norm,
                                                      KinkBreaker* kinks) {
  require_positive(epsilon, "epsilon");
  if (z.dim() != ref.z_ori.dim()) throw InvalidInput("latent dimension mismatch");
  auto adv = model.decode_with_pullback(z);
  auto recon = model.reconstruct_with_pullback(adv.value);
  const auto out_term =
      distance_with_gradient(recon.value.pixels(), ref.reconstruction_ori.pixels(), norm);
  const auto z_dist = distance_with_gradient(as_span(z), as_span(ref.z_ori), norm, kinks);
  const double hinge = std::max(epsilon - z_dist.value, 0.0);

  LossGradient<LatentVector> r;
  r.output_term = out_term.value;
  r.input_term = hinge;
  r.input_distance = z_dist.value;
  r.value = out_term.value + lambda * hinge;
  r.gradient = adv.backward(recon.backward(Image(recon.value.shape(), out_term.gradient)));
  if (hinge > 0.0) {
    for (Eigen::Index i = 0; i < r.gradient.values.size(); ++i) {
      r.gradient.values[i] -= lambda * z_dist.gradient[static_cast<std::size_t>(i)];
    }
  }
  r.adversarial_image = std::move(adv.value);
  r.output = std::move(recon.value);
  return r;
}

// ---------------------------------------------------------------- style space

double loss_style_space(const StyleVector& w, const StyleVector& w_ori, const StyleGenerator& gen,
                        double lambda, double epsilon) {
  require_positive(epsilon, "epsilon");
  if (w.layers() != w_ori.layers() || w.style_dim() != w_ori.style_dim()) {
    throw InvalidInput("w and w_ori differ in shape");
  }
  const double out = distance(gen.synthesize(w).pixels(), gen.synthesize(w_ori).pixels(), Norm::l1);
  const double hinge = std::max(epsilon - distance(w.values(), w_ori.values(), Norm::l1), 0.0);
  return out + lambda * hinge;
}

LossGradient<StyleVector> loss_style_space_gradient(const StyleVector& w, const StyleVector& w_ori,
                                                    const Image& output_ori,
                                                    const StyleGenerator& gen, double lambda,
                                                    double epsilon, KinkBreaker* kinks) {
  require_positive(epsilon, "epsilon");
  if (w.layers() != w_ori.layers() || w.style_dim() != w_ori.style_dim()) {
    throw InvalidInput("w and w_ori differ in shape");
  }
  auto image = gen.synthesize_with_pullback(w);
  const auto out_term = distance_with_gradient(image.value.pixels(), output_ori.pixels(), Norm::l1);
  const auto w_dist = distance_with_gradient(w.values(), w_ori.values(), Norm::l1, kinks);
  const double hinge = std::max(epsilon - w_dist.value, 0.0);

  LossGradient<StyleVector> r;
  r.output_term = out_term.value;
  r.input_term = hinge;
  r.input_distance = w_dist.value;
  r.value = out_term.value + lambda * hinge;
  r.gradient = image.backward(Image(image.value.shape(), out_term.gradient));
  if (hinge > 0.0) {
    auto g = r.gradient.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= lambda * w_dist.gradient[i];
  }
  r.adversarial_image = image.value;
  r.output = std::move(image.value);
  return r;
}

}  // namespace typei
