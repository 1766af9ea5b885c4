#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "typei/style_generator.hpp"
#include "typei/vae.hpp"

namespace typei::test {

inline VaeConfig tiny_vae_config() {
  VaeConfig c;
  c.input_shape = {1, 8, 8};
  c.latent_dim = 3;
  c.conv_channels = 2;
  c.hidden_units = 8;
  return c;
}

inline VaeModel tiny_vae(std::uint64_t seed = 3) { return VaeModel(tiny_vae_config(), seed); }

inline StyleGeneratorConfig tiny_style_config() {
  StyleGeneratorConfig c;
  c.latent_dim = 4;
  c.style_dim = 6;
  c.mapping_layers = 2;
  c.mapping_hidden = 8;
  c.channels = 2;
  c.output_channels = 3;
  c.resolution = 8;
  return c;
}

inline StyleGenerator tiny_generator(std::uint64_t seed = 5) { return StyleGenerator(tiny_style_config(), seed); }

inline Image random_image(const ImageShape& shape, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(shape);
  for (auto& p : img.pixels()) p = u(rng);
  return img;
}

inline LatentVector random_latent(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  LatentVector z{Vector(static_cast<Eigen::Index>(dim))};
  for (auto& v : z.values) v = n(rng);
  return z;
}

// Central differences of f at x, step h (small, so stencils rarely straddle a kink), one coordinate at a time.
inline std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                              std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, tiny)
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

// Fresh, empty directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("typei-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace typei::test
