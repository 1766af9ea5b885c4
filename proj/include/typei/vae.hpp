#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "typei/differentiable.hpp"
#include "typei/nn.hpp"
#include "typei/tensor.hpp"

namespace typei {

// Convolutional VAE: two stride-2 convolutions and a dense bottleneck, mirrored
// by the decoder, which ends in a sigmoid so every pixel lies in [0, 1].
// Height and width must be divisible by 4.
struct VaeConfig {
  ImageShape input_shape{1, 28, 28};
  std::size_t latent_dim = 16;
  std::size_t conv_channels = 32;  // first conv; the second uses twice as many
  std::size_t hidden_units = 256;  // dense layer between conv trunk and latent; 0 disables

  static VaeConfig mnist();
  static VaeConfig svhn();
  void validate() const;
  friend bool operator==(const VaeConfig&, const VaeConfig&) = default;
};

class VaeModel {
 public:
  VaeModel(const VaeConfig& config, std::uint64_t seed);

  const VaeConfig& config() const { return config_; }
  const ImageShape& input_shape() const { return config_.input_shape; }
  std::size_t latent_dim() const { return config_.latent_dim; }

  LatentDistribution encode(const Image& x) const;
  Image decode(const LatentVector& z) const;
  // decode(mean of encode(x)): the deterministic path used by attacks and evaluation.
  Image reconstruct(const Image& x) const;

  Pullback<Image, Image> reconstruct_with_pullback(const Image& x) const;
  Pullback<LatentVector, Image> decode_with_pullback(const LatentVector& z) const;

  // Batched forms over (N, C, H, W) / (N, D_z).
  Tensor encode_batch(const Tensor& x) const;  // (N, 2 * D_z): means then log-variances
  Tensor decode_batch(const Tensor& z) const;
  Tensor reconstruct_batch(const Tensor& x) const;

  nn::Sequential& encoder() { return encoder_; }
  nn::Sequential& decoder() { return decoder_; }
  const nn::Sequential& encoder() const { return encoder_; }
  const nn::Sequential& decoder() const { return decoder_; }

 private:
  void check_image(const Image& x) const;
  void check_latent(const LatentVector& z) const;

  VaeConfig config_;
  nn::Sequential encoder_;
  nn::Sequential decoder_;
};

struct VaeTrainConfig {
  std::size_t epochs = 12;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double kl_weight = 1.0;
  std::uint64_t seed = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // per-sample ELBO loss (BCE + weighted KL)
  double test_rmsd = 0.0;
};

struct VaeTrainingResult {
  VaeModel model;
  double test_rmsd = 0.0;
  std::vector<EpochLog> log;
};

// Trains from a seeded initialization. The final test-set reconstruction
// RMSD is measured along the mean path. When `checkpoint` is set the trained
// model is saved there.
VaeTrainingResult train_vae(std::span<const Image> train, std::span<const Image> test,
                            const VaeConfig& config, const VaeTrainConfig& train_config,
                            const std::optional<std::filesystem::path>& checkpoint = std::nullopt,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

// Mean reconstruction RMSD over a set of images.
double mean_reconstruction_rmsd(const VaeModel& model, std::span<const Image> images);

// Stacks images into a (N, C, H, W) batch.
Tensor stack_images(std::span<const Image> images);

}  // namespace typei
