#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "typei/tensor.hpp"

// Minimal feed-forward layers with hand-written backward passes.
//
// Every layer is a value type. backward() receives the layer input x, the
// forward output y and the upstream gradient gy, and returns the gradient with
// respect to x. Parameter gradients are accumulated into `grads` (one matrix
// per parameter, same order as parameters()) when it is non-empty.
namespace typei::nn {

struct Dense {
  Dense() = default;
  Dense(std::size_t in, std::size_t out, std::mt19937_64& rng, double gain = 1.0);

  Matrix weight;  // (out, in)
  Matrix bias;    // (out, 1)

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                  std::span<Matrix> grads) const;
  std::vector<Matrix*> parameters() { return {&weight, &bias}; }
  std::vector<const Matrix*> parameters() const { return {&weight, &bias}; }
};

struct ConvGeometry {
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;

  std::size_t output_extent(std::size_t input) const {
    return (input + 2 * padding - kernel) / stride + 1;
  }
  std::size_t transposed_extent(std::size_t input) const {
    return (input - 1) * stride + kernel - 2 * padding;
  }
};

struct Conv2d {
  Conv2d() = default;
  Conv2d(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry,
         std::mt19937_64& rng, double gain = 1.0);

  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  ConvGeometry geometry;
  Matrix weight;  // (out, in * k * k)
  Matrix bias;    // (out, 1)

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                  std::span<Matrix> grads) const;
  std::vector<Matrix*> parameters() { return {&weight, &bias}; }
  std::vector<const Matrix*> parameters() const { return {&weight, &bias}; }
};

// Adjoint of Conv2d with the same geometry; upsamples by `stride`.
struct ConvTranspose2d {
  ConvTranspose2d() = default;
  ConvTranspose2d(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry,
                  std::mt19937_64& rng, double gain = 1.0);

  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  ConvGeometry geometry;
  Matrix weight;  // (in, out * k * k)
  Matrix bias;    // (out, 1)

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                  std::span<Matrix> grads) const;
  std::vector<Matrix*> parameters() { return {&weight, &bias}; }
  std::vector<const Matrix*> parameters() const { return {&weight, &bias}; }
};

enum class ActivationKind { relu, leaky_relu, sigmoid, tanh };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.2;  // leaky_relu only

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                  std::span<Matrix> grads) const;
  std::vector<Matrix*> parameters() { return {}; }
  std::vector<const Matrix*> parameters() const { return {}; }
};

// Reinterprets each sample with a new per-sample shape.
struct Reshape {
  std::vector<std::size_t> sample_shape;

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                  std::span<Matrix> grads) const;
  std::vector<Matrix*> parameters() { return {}; }
  std::vector<const Matrix*> parameters() const { return {}; }
};

// Nearest-neighbour 2x upsampling of (N, C, H, W).
struct Upsample2x {
  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                  std::span<Matrix> grads) const;
  std::vector<Matrix*> parameters() { return {}; }
  std::vector<const Matrix*> parameters() const { return {}; }
};

using Layer = std::variant<Dense, Conv2d, ConvTranspose2d, Activation, Reshape, Upsample2x>;

class Sequential {
 public:
  Sequential() = default;

  void add(Layer layer) { layers_.push_back(std::move(layer)); }
  std::size_t depth() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }

  Tensor forward(const Tensor& x) const;
  // trace[0] = x, trace[i + 1] = output of layer i.
  Tensor forward(const Tensor& x, std::vector<Tensor>& trace) const;
  // gy is the gradient with respect to trace[end]; layers [0, end) are
  // back-propagated. end defaults to the full depth.
  Tensor backward(const std::vector<Tensor>& trace, const Tensor& gy,
                  std::span<Matrix> grads = {}, std::size_t end = npos) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  // "<layer index>.weight" / "<layer index>.bias".
  std::vector<std::string> parameter_names() const;
  std::vector<Matrix> zero_gradients() const;

 private:
  std::vector<Layer> layers_;
};

// (C*k*k, N*Ho*Wo) patch matrix of a batch (N, C, H, W).
Matrix im2col(const Tensor& x, const ConvGeometry& g);
// Scatter-add adjoint of im2col onto a (N, C, H, W) tensor.
Tensor col2im(const Matrix& cols, std::size_t batch, std::size_t channels, std::size_t height,
              std::size_t width, const ConvGeometry& g);

class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(const std::vector<Matrix*>& params, std::span<const Matrix> grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace typei::nn
