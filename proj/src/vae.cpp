#include "typei/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "typei/checkpoint.hpp"
#include "typei/error.hpp"
#include "typei/metrics.hpp"

namespace typei {
namespace {

constexpr nn::ConvGeometry kDownsample{4, 2, 1};

nn::Activation leaky() { return {nn::ActivationKind::leaky_relu, 0.2}; }
nn::Activation relu() { return {nn::ActivationKind::relu, 0.0}; }

}  // namespace

VaeConfig VaeConfig::mnist() { return VaeConfig{}; }

VaeConfig VaeConfig::svhn() {
  VaeConfig c;
  c.input_shape = {3, 32, 32};
  c.latent_dim = 64;
  c.conv_channels = 32;
  c.hidden_units = 512;
  return c;
}

void VaeConfig::validate() const {
  if (input_shape.size() == 0) throw InvalidInput("VAE input shape is empty");
  if (input_shape.height % 4 != 0 || input_shape.width % 4 != 0) {
    throw InvalidInput("VAE input height and width must be divisible by 4, got " +
                       input_shape.str());
  }
  if (latent_dim == 0 || conv_channels == 0) throw InvalidInput("VAE latent/conv sizes must be positive");
}

VaeModel::VaeModel(const VaeConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t c = config_.input_shape.channels;
  const std::size_t c1 = config_.conv_channels, c2 = 2 * config_.conv_channels;
  const std::size_t h4 = config_.input_shape.height / 4, w4 = config_.input_shape.width / 4;
  const std::size_t trunk = c2 * h4 * w4;
  const std::size_t d = config_.latent_dim;
  const double he = std::sqrt(2.0);

  encoder_.add(nn::Conv2d(c, c1, kDownsample, rng, he));
  encoder_.add(leaky());
  encoder_.add(nn::Conv2d(c1, c2, kDownsample, rng, he));
  encoder_.add(leaky());
  encoder_.add(nn::Reshape{{trunk}});
  if (config_.hidden_units > 0) {
    encoder_.add(nn::Dense(trunk, config_.hidden_units, rng, he));
    encoder_.add(leaky());
    encoder_.add(nn::Dense(config_.hidden_units, 2 * d, rng, 1.0));
  } else {
    encoder_.add(nn::Dense(trunk, 2 * d, rng, 1.0));
  }

  if (config_.hidden_units > 0) {
    decoder_.add(nn::Dense(d, config_.hidden_units, rng, he));
    decoder_.add(relu());
    decoder_.add(nn::Dense(config_.hidden_units, trunk, rng, he));
  } else {
    decoder_.add(nn::Dense(d, trunk, rng, he));
  }
  decoder_.add(relu());
  decoder_.add(nn::Reshape{{c2, h4, w4}});
  decoder_.add(nn::ConvTranspose2d(c2, c1, kDownsample, rng, he));
  decoder_.add(relu());
  decoder_.add(nn::ConvTranspose2d(c1, c, kDownsample, rng, 1.0));
  decoder_.add(nn::Activation{nn::ActivationKind::sigmoid, 0.0});
}

void VaeModel::check_image(const Image& x) const {
  if (x.shape() != config_.input_shape) {
    throw InvalidInput("image shape " + x.shape().str() + " does not match model input " +
                       config_.input_shape.str());
  }
}

void VaeModel::check_latent(const LatentVector& z) const {
  if (z.dim() != config_.latent_dim) {
    throw InvalidInput("latent dimension " + std::to_string(z.dim()) + " does not match model " +
                       std::to_string(config_.latent_dim));
  }
}

Tensor VaeModel::encode_batch(const Tensor& x) const { return encoder_.forward(x); }

Tensor VaeModel::decode_batch(const Tensor& z) const { return decoder_.forward(z); }

Tensor VaeModel::reconstruct_batch(const Tensor& x) const {
  const Tensor stats = encode_batch(x);
  const std::size_t n = x.batch(), d = config_.latent_dim;
  Tensor means({n, d});
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(stats.data() + i * 2 * d, d, means.data() + i * d);
  return decode_batch(means);
}

LatentDistribution VaeModel::encode(const Image& x) const {
  check_image(x);
  const Tensor stats = encoder_.forward(x.to_batch());
  const auto d = static_cast<Eigen::Index>(config_.latent_dim);
  Eigen::Map<const Vector> all(stats.data(), 2 * d);
  return {all.head(d), all.tail(d)};
}

Image VaeModel::decode(const LatentVector& z) const {
  check_latent(z);
  Tensor in({1, config_.latent_dim}, std::vector<double>(z.values.data(), z.values.data() + z.values.size()));
  return Image::from_batch(decoder_.forward(in), 0);
}

Image VaeModel::reconstruct(const Image& x) const { return decode(LatentVector{encode(x).mean}); }

Pullback<LatentVector, Image> VaeModel::decode_with_pullback(const LatentVector& z) const {
  check_latent(z);
  Tensor in({1, config_.latent_dim}, std::vector<double>(z.values.data(), z.values.data() + z.values.size()));
  auto trace = std::make_shared<std::vector<Tensor>>();
  const Tensor out = decoder_.forward(in, *trace);
  return {Image::from_batch(out, 0), [this, trace](const Image& g) {
            const Tensor gz = decoder_.backward(*trace, g.to_batch());
            return LatentVector{Eigen::Map<const Vector>(gz.data(), static_cast<Eigen::Index>(gz.size()))};
          }};
}

Pullback<Image, Image> VaeModel::reconstruct_with_pullback(const Image& x) const {
  check_image(x);
  const std::size_t d = config_.latent_dim;
  auto enc_trace = std::make_shared<std::vector<Tensor>>();
  const Tensor stats = encoder_.forward(x.to_batch(), *enc_trace);
  LatentVector mean{Eigen::Map<const Vector>(stats.data(), static_cast<Eigen::Index>(d))};
  auto dec = decode_with_pullback(mean);
  auto dec_backward = std::move(dec.backward);
  const ImageShape shape = config_.input_shape;
  return {std::move(dec.value), [this, enc_trace, dec_backward, d, shape](const Image& g) {
            const LatentVector gz = dec_backward(g);
            Tensor gstats({1, 2 * d});
            std::copy_n(gz.values.data(), d, gstats.data());
            const Tensor gx = encoder_.backward(*enc_trace, gstats);
            return Image(shape, std::vector<double>(gx.values().begin(), gx.values().end()));
          }};
}

Tensor stack_images(std::span<const Image> images) {
  if (images.empty()) throw InvalidInput("cannot stack an empty image list");
  const ImageShape shape = images.front().shape();
  Tensor batch({images.size(), shape.channels, shape.height, shape.width});
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape() != shape) throw InvalidInput("images in a batch must share one shape");
    std::copy(images[i].pixels().begin(), images[i].pixels().end(), batch.data() + i * shape.size());
  }
  return batch;
}

double mean_reconstruction_rmsd(const VaeModel& model, std::span<const Image> images) {
  if (images.empty()) throw InvalidInput("no images to evaluate");
  constexpr std::size_t kChunk = 128;
  double total = 0.0;
  for (std::size_t start = 0; start < images.size(); start += kChunk) {
    const auto chunk = images.subspan(start, std::min(kChunk, images.size() - start));
    const Tensor recon = model.reconstruct_batch(stack_images(chunk));
    for (std::size_t i = 0; i < chunk.size(); ++i) total += rmsd(chunk[i], Image::from_batch(recon, i));
  }
  return total / static_cast<double>(images.size());
}

VaeTrainingResult train_vae(std::span<const Image> train, std::span<const Image> test,
                            const VaeConfig& config, const VaeTrainConfig& tc,
                            const std::optional<std::filesystem::path>& checkpoint,
                            const std::function<void(const EpochLog&)>& on_epoch) {
  if (train.empty()) throw InvalidInput("training set is empty");
  if (tc.batch_size == 0 || tc.epochs == 0) throw InvalidInput("epochs and batch size must be positive");
  for (const Image& x : train) {
    if (x.shape() != config.input_shape) {
      throw InvalidInput("training image shape " + x.shape().str() + " does not match " +
                         config.input_shape.str());
    }
    if (!x.in_unit_range()) throw InvalidInput("training images must be normalized to [0, 1]");
  }
  const std::span<const Image> eval = test.empty() ? train : test;

  VaeModel model(config, tc.seed);
  std::mt19937_64 rng(tc.seed ^ 0x9E3779B97F4A7C15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  nn::Adam enc_opt(tc.learning_rate), dec_opt(tc.learning_rate);

  const std::size_t d = config.latent_dim;
  const std::size_t dec_depth = model.decoder().depth();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  VaeTrainingResult result{model, 0.0, {}};
  std::vector<Tensor> enc_trace, dec_trace;
  std::vector<Image> batch_images;
  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t n = std::min(tc.batch_size, order.size() - start);
      batch_images.clear();
      for (std::size_t i = 0; i < n; ++i) batch_images.push_back(train[order[start + i]]);
      const Tensor x = stack_images(batch_images);

      const Tensor stats = model.encoder().forward(x, enc_trace);
      Tensor z({n, d}), noise({n, d});
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          const double mu = stats[i * 2 * d + j], lv = stats[i * 2 * d + d + j];
          noise[i * d + j] = normal(rng);
          z[i * d + j] = mu + std::exp(0.5 * lv) * noise[i * d + j];
        }
      const Tensor y = model.decoder().forward(z, dec_trace);

      // Binary cross-entropy against the sigmoid output; its gradient with
      // respect to the pre-sigmoid logits is (y - x).
      const double inv_n = 1.0 / static_cast<double>(n);
      double loss = 0.0;
      Tensor glogits(y.shape());
      for (std::size_t k = 0; k < y.size(); ++k) {
        const double p = std::clamp(y[k], 1e-12, 1.0 - 1e-12);
        loss -= x[k] * std::log(p) + (1.0 - x[k]) * std::log(1.0 - p);
        glogits[k] = (y[k] - x[k]) * inv_n;
      }
      auto dec_grads = model.decoder().zero_gradients();
      const Tensor gz = model.decoder().backward(dec_trace, glogits, dec_grads, dec_depth - 1);

      Tensor gstats({n, 2 * d});
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          const double mu = stats[i * 2 * d + j], lv = stats[i * 2 * d + d + j];
          const double sigma = std::exp(0.5 * lv);
          loss += tc.kl_weight * -0.5 * (1.0 + lv - mu * mu - sigma * sigma);
          const double g = gz[i * d + j];
          gstats[i * 2 * d + j] = g + tc.kl_weight * mu * inv_n;
          gstats[i * 2 * d + d + j] =
              g * noise[i * d + j] * 0.5 * sigma + tc.kl_weight * 0.5 * (sigma * sigma - 1.0) * inv_n;
        }
      if (!std::isfinite(loss)) throw TrainingFailure("VAE loss became non-finite", epoch);
      auto enc_grads = model.encoder().zero_gradients();
      model.encoder().backward(enc_trace, gstats, enc_grads);

      dec_opt.step(model.decoder().parameters(), dec_grads);
      enc_opt.step(model.encoder().parameters(), enc_grads);
      epoch_loss += loss;
    }
    EpochLog entry{epoch, epoch_loss / static_cast<double>(train.size()),
                   mean_reconstruction_rmsd(model, eval)};
    if (!std::isfinite(entry.test_rmsd)) throw TrainingFailure("reconstruction became non-finite", epoch);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  result.model = std::move(model);
  result.test_rmsd = result.log.back().test_rmsd;
  if (checkpoint) save_checkpoint(result.model, *checkpoint);
  return result;
}

}  // namespace typei
