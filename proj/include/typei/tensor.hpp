#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace typei {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major array. Network activations are batch-first: (N, C, H, W) or (N, F).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return values_.size(); }
  std::size_t batch() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t sample_size() const { return batch() == 0 ? 0 : size() / batch(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Same values, new shape; total size must match.
  Tensor reshaped(std::vector<std::size_t> shape) const&;
  Tensor reshaped(std::vector<std::size_t> shape) &&;

  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);

struct ImageShape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  std::string str() const;
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

// A single image in (C, H, W) layout with [0, 1]-normalized intensities.
class Image {
 public:
  Image() = default;
  explicit Image(ImageShape shape, double fill = 0.0);
  Image(ImageShape shape, std::vector<double> pixels);

  const ImageShape& shape() const { return shape_; }
  std::size_t size() const { return pixels_.size(); }
  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return pixels_[(c * shape_.height + y) * shape_.width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return pixels_[(c * shape_.height + y) * shape_.width + x];
  }

  void clamp_unit();
  bool in_unit_range() const;
  bool all_finite() const;

  // (1, C, H, W) view for the network layers.
  Tensor to_batch() const;
  static Image from_batch(const Tensor& batch, std::size_t index);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  ImageShape shape_;
  std::vector<double> pixels_;
};

struct LatentVector {
  Vector values;

  std::size_t dim() const { return static_cast<std::size_t>(values.size()); }
  bool all_finite() const { return values.allFinite(); }
};

struct LatentDistribution {
  Vector mean;
  Vector log_variance;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

// One style row per synthesis layer: shape (L, D_w).
struct StyleVector {
  RowMatrix rows;

  std::size_t layers() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t style_dim() const { return static_cast<std::size_t>(rows.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(rows.size()); }
  std::span<const double> values() const { return {rows.data(), size()}; }
  std::span<double> values() { return {rows.data(), size()}; }
  bool all_finite() const { return rows.allFinite(); }
};

}  // namespace typei
