#include "typei/style_generator.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "typei/error.hpp"

namespace typei {
namespace {

constexpr double kNormEpsilon = 1e-5;
constexpr nn::ConvGeometry kConv3{3, 1, 1};
constexpr nn::ConvGeometry kConv1{1, 1, 0};

Tensor row_as_batch(const StyleVector& w, std::size_t layer) {
  const std::size_t d = w.style_dim();
  const double* begin = w.rows.data() + layer * d;
  return Tensor({1, d}, std::vector<double>(begin, begin + d));
}

}  // namespace

std::size_t StyleGeneratorConfig::num_style_layers() const {
  std::size_t resolutions = 0;
  for (std::size_t r = 4; r <= resolution; r *= 2) ++resolutions;
  return 2 * resolutions;
}

void StyleGeneratorConfig::validate() const {
  std::size_t r = 4;
  while (r < resolution) r *= 2;
  if (resolution < 4 || r != resolution) {
    throw InvalidInput("style generator resolution must be 4 * 2^k, got " + std::to_string(resolution));
  }
  if (latent_dim == 0 || style_dim == 0 || channels == 0 || output_channels == 0 ||
      mapping_layers == 0 || mapping_hidden == 0) {
    throw InvalidInput("style generator sizes must be positive");
  }
}

struct StyleGenerator::Trace {
  struct Layer {
    Tensor block_input;   // after optional upsample; conv input
    Tensor upsample_input;
    Tensor conv_out;      // pre-activation
    Tensor activated;     // AdaIN input
    Tensor normalized;    // x-hat
    std::vector<double> inv_std;
    Tensor style_row;
    Tensor scale;         // 1 + s, per channel
  };
  std::vector<Layer> layers;
  Tensor features;  // last AdaIN output
  Tensor logits;
  Tensor image;
};

StyleGenerator::StyleGenerator(const StyleGeneratorConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const double he = std::sqrt(2.0);
  std::size_t in = config_.latent_dim;
  for (std::size_t i = 0; i + 1 < config_.mapping_layers; ++i) {
    mapping_.add(nn::Dense(in, config_.mapping_hidden, rng, he));
    mapping_.add(nn::Activation{nn::ActivationKind::leaky_relu, 0.2});
    in = config_.mapping_hidden;
  }
  mapping_.add(nn::Dense(in, config_.style_dim, rng, 1.0));

  std::normal_distribution<double> normal(0.0, 1.0);
  constant_.resize(static_cast<Eigen::Index>(config_.channels), 16);
  for (Eigen::Index j = 0; j < constant_.cols(); ++j)
    for (Eigen::Index i = 0; i < constant_.rows(); ++i) constant_(i, j) = normal(rng);

  const std::size_t count = config_.num_style_layers();
  for (std::size_t l = 0; l < count; ++l) {
    StyleLayer layer;
    layer.upsample = l >= 2 && l % 2 == 0;
    layer.has_conv = l > 0;
    if (layer.has_conv) layer.conv = nn::Conv2d(config_.channels, config_.channels, kConv3, rng, he);
    layer.style_scale = nn::Dense(config_.style_dim, config_.channels, rng, config_.style_gain);
    layer.style_bias = nn::Dense(config_.style_dim, config_.channels, rng, config_.style_gain);
    layers_.push_back(std::move(layer));
  }
  to_image_ = nn::Conv2d(config_.channels, config_.output_channels, kConv1, rng, 1.0);
}

void StyleGenerator::check_style(const StyleVector& w) const {
  if (w.layers() != layers_.size() || w.style_dim() != config_.style_dim) {
    throw InvalidInput("style vector of shape (" + std::to_string(w.layers()) + ", " +
                       std::to_string(w.style_dim()) + ") does not match generator (" +
                       std::to_string(layers_.size()) + ", " + std::to_string(config_.style_dim) + ")");
  }
}

StyleVector StyleGenerator::map_style(const LatentVector& z) const {
  if (z.dim() != config_.latent_dim) {
    throw InvalidInput("latent dimension " + std::to_string(z.dim()) + " does not match mapping input " +
                       std::to_string(config_.latent_dim));
  }
  const Tensor in({1, z.dim()}, std::vector<double>(z.values.data(), z.values.data() + z.dim()));
  const Tensor out = mapping_.forward(in);
  StyleVector w;
  w.rows.resize(static_cast<Eigen::Index>(layers_.size()), static_cast<Eigen::Index>(config_.style_dim));
  for (Eigen::Index l = 0; l < w.rows.rows(); ++l)
    for (Eigen::Index j = 0; j < w.rows.cols(); ++j) w.rows(l, j) = out[static_cast<std::size_t>(j)];
  return w;
}

Image StyleGenerator::run(const StyleVector& w, Trace* trace) const {
  check_style(w);
  const std::size_t c = config_.channels;
  Tensor h({1, c, 4, 4});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t p = 0; p < 16; ++p) h[ch * 16 + p] = constant_(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(p));

  if (trace) trace->layers.resize(layers_.size());
  const nn::Activation act{nn::ActivationKind::leaky_relu, 0.2};
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const StyleLayer& layer = layers_[l];
    Trace::Layer* t = trace ? &trace->layers[l] : nullptr;
    if (layer.upsample) {
      if (t) t->upsample_input = h;
      h = nn::Upsample2x{}.forward(h);
    }
    if (layer.has_conv) {
      if (t) t->block_input = h;
      Tensor pre = layer.conv.forward(h);
      h = act.forward(pre);
      if (t) t->conv_out = std::move(pre);
    }
    if (t) t->activated = h;

    const Tensor row = row_as_batch(w, l);
    const Tensor s = layer.style_scale.forward(row);
    const Tensor b = layer.style_bias.forward(row);
    const std::size_t p = h.dim(2) * h.dim(3);
    Tensor normalized(h.shape());
    std::vector<double> inv_std(c);
    Tensor scale({1, c});
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* x = h.data() + ch * p;
      double mean = 0.0;
      for (std::size_t k = 0; k < p; ++k) mean += x[k];
      mean /= static_cast<double>(p);
      double var = 0.0;
      for (std::size_t k = 0; k < p; ++k) var += (x[k] - mean) * (x[k] - mean);
      var /= static_cast<double>(p);
      inv_std[ch] = 1.0 / std::sqrt(var + kNormEpsilon);
      scale[ch] = 1.0 + s[ch];
      double* xn = normalized.data() + ch * p;
      for (std::size_t k = 0; k < p; ++k) xn[k] = (x[k] - mean) * inv_std[ch];
    }
    Tensor out(h.shape());
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t k = 0; k < p; ++k) out[ch * p + k] = scale[ch] * normalized[ch * p + k] + b[ch];
    if (t) {
      t->normalized = std::move(normalized);
      t->inv_std = std::move(inv_std);
      t->style_row = row;
      t->scale = std::move(scale);
    }
    h = std::move(out);
  }
  Tensor logits = to_image_.forward(h);
  const Tensor image = nn::Activation{nn::ActivationKind::sigmoid, 0.0}.forward(logits);
  if (trace) {
    trace->features = std::move(h);
    trace->logits = std::move(logits);
    trace->image = image;
  }
  return Image::from_batch(image, 0);
}

Image StyleGenerator::synthesize(const StyleVector& w) const { return run(w, nullptr); }

Pullback<StyleVector, Image> StyleGenerator::synthesize_with_pullback(const StyleVector& w) const {
  auto trace = std::make_shared<Trace>();
  Image value = run(w, trace.get());
  const std::size_t rows = w.layers(), dims = w.style_dim();
  return {std::move(value), [this, trace, rows, dims](const Image& g) {
            const nn::Activation sigmoid{nn::ActivationKind::sigmoid, 0.0};
            const nn::Activation act{nn::ActivationKind::leaky_relu, 0.2};
            Tensor gh = sigmoid.backward(trace->logits, trace->image, g.to_batch(), {});
            gh = to_image_.backward(trace->features, trace->logits, gh, {});

            StyleVector gw;
            gw.rows = RowMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dims));
            const std::size_t c = config_.channels;
            for (std::size_t l = layers_.size(); l-- > 0;) {
              const StyleLayer& layer = layers_[l];
              const Trace::Layer& t = trace->layers[l];
              const std::size_t p = t.normalized.dim(2) * t.normalized.dim(3);
              const double inv_p = 1.0 / static_cast<double>(p);
              Tensor gscale({1, c}), gbias({1, c});
              Tensor gx(t.normalized.shape());
              for (std::size_t ch = 0; ch < c; ++ch) {
                const double* gy = gh.data() + ch * p;
                const double* xn = t.normalized.data() + ch * p;
                double gs = 0.0, gb = 0.0, mean_g = 0.0, mean_gx = 0.0;
                for (std::size_t k = 0; k < p; ++k) {
                  gs += gy[k] * xn[k];
                  gb += gy[k];
                }
                const double sc = t.scale[ch];
                mean_g = gb * sc * inv_p;
                mean_gx = gs * sc * inv_p;
                double* out = gx.data() + ch * p;
                for (std::size_t k = 0; k < p; ++k) {
                  out[k] = t.inv_std[ch] * (gy[k] * sc - mean_g - xn[k] * mean_gx);
                }
                gscale[ch] = gs;
                gbias[ch] = gb;
              }
              const Tensor gw_scale = layer.style_scale.backward(t.style_row, {}, gscale, {});
              const Tensor gw_bias = layer.style_bias.backward(t.style_row, {}, gbias, {});
              for (std::size_t j = 0; j < dims; ++j) {
                gw.rows(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) = gw_scale[j] + gw_bias[j];
              }
              gh = std::move(gx);
              if (layer.has_conv) {
                gh = act.backward(t.conv_out, t.activated, gh, {});
                gh = layer.conv.backward(t.block_input, t.conv_out, gh, {});
              }
              if (layer.upsample) gh = nn::Upsample2x{}.backward(t.upsample_input, {}, gh, {});
            }
            return gw;
          }};
}

std::vector<std::pair<std::string, Matrix*>> StyleGenerator::named_parameters() {
  std::vector<std::pair<std::string, Matrix*>> out;
  const auto names = mapping_.parameter_names();
  const auto params = mapping_.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) out.emplace_back("mapping." + names[i], params[i]);
  out.emplace_back("constant", &constant_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    if (layers_[l].has_conv) {
      out.emplace_back(prefix + "conv.weight", &layers_[l].conv.weight);
      out.emplace_back(prefix + "conv.bias", &layers_[l].conv.bias);
    }
    out.emplace_back(prefix + "style_scale.weight", &layers_[l].style_scale.weight);
    out.emplace_back(prefix + "style_scale.bias", &layers_[l].style_scale.bias);
    out.emplace_back(prefix + "style_bias.weight", &layers_[l].style_bias.weight);
    out.emplace_back(prefix + "style_bias.bias", &layers_[l].style_bias.bias);
  }
  out.emplace_back("to_image.weight", &to_image_.weight);
  out.emplace_back("to_image.bias", &to_image_.bias);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> StyleGenerator::named_parameters() const {
  auto mutable_params = const_cast<StyleGenerator*>(this)->named_parameters();
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, p] : mutable_params) out.emplace_back(name, p);
  return out;
}

}  // namespace typei
