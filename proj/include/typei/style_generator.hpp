#pragma once

#include <cstdint>
#include <vector>

#include "typei/differentiable.hpp"
#include "typei/nn.hpp"
#include "typei/tensor.hpp"

namespace typei {

// Toy style-based generator G = Gs(f(z)).
//
// The mapping network f is an MLP Z -> W. The synthesis network Gs starts from
// a learned 4x4 constant and runs two style layers per resolution
// (4, 8, ..., resolution); every resolution after the first begins with a 2x
// nearest upsample. Each style layer is [conv3x3 + leaky ReLU] followed by
// adaptive instance normalization driven by its own row of w. The first
// layer modulates the constant directly. A 1x1 convolution and a sigmoid
// produce the image. There are no noise inputs, so Gs is a deterministic
// function of w.
struct StyleGeneratorConfig {
  std::size_t latent_dim = 32;
  std::size_t style_dim = 64;
  std::size_t mapping_layers = 4;
  std::size_t mapping_hidden = 64;
  std::size_t channels = 8;
  std::size_t output_channels = 3;
  std::size_t resolution = 32;  // 4 * 2^k
  double style_gain = 0.6;      // init scale of the style affine maps

  std::size_t num_style_layers() const;
  ImageShape output_shape() const { return {output_channels, resolution, resolution}; }
  void validate() const;
  friend bool operator==(const StyleGeneratorConfig&, const StyleGeneratorConfig&) = default;
};

class StyleGenerator {
 public:
  // Seeded random initialization.
  StyleGenerator(const StyleGeneratorConfig& config, std::uint64_t seed);

  const StyleGeneratorConfig& config() const { return config_; }
  std::size_t num_style_layers() const { return layers_.size(); }
  std::size_t style_dim() const { return config_.style_dim; }

  // f(z), broadcast to every synthesis layer.
  StyleVector map_style(const LatentVector& z) const;
  Image synthesize(const StyleVector& w) const;
  Pullback<StyleVector, Image> synthesize_with_pullback(const StyleVector& w) const;
  Image generate(const LatentVector& z) const { return synthesize(map_style(z)); }

  struct StyleLayer {
    bool upsample = false;
    bool has_conv = false;
    nn::Conv2d conv;
    nn::Dense style_scale;  // w_l -> per-channel scale offset
    nn::Dense style_bias;   // w_l -> per-channel bias
  };

  // Parameter access for checkpoints, in a fixed order with stable names.
  std::vector<std::pair<std::string, Matrix*>> named_parameters();
  std::vector<std::pair<std::string, const Matrix*>> named_parameters() const;

 private:
  struct Trace;
  Image run(const StyleVector& w, Trace* trace) const;
  void check_style(const StyleVector& w) const;

  StyleGeneratorConfig config_;
  nn::Sequential mapping_;
  Matrix constant_;  // (channels, 16): the 4x4 starting block
  std::vector<StyleLayer> layers_;
  nn::Conv2d to_image_;
};

}  // namespace typei
