#include "typei/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "typei/error.hpp"

namespace typei {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw InvalidInput("tensor shape " + shape_string() + " does not match " +
                       std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const& {
  return Tensor(std::move(shape), values_);
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) && {
  return Tensor(std::move(shape), std::move(values_));
}

std::string Tensor::shape_string() const {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape_.size(); ++i) out << (i ? ", " : "") << shape_[i];
  out << ')';
  return out.str();
}

std::string ImageShape::str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

Image::Image(ImageShape shape, double fill) : shape_(shape), pixels_(shape.size(), fill) {}

Image::Image(ImageShape shape, std::vector<double> pixels)
    : shape_(shape), pixels_(std::move(pixels)) {
  if (pixels_.size() != shape_.size()) {
    throw InvalidInput("image of shape " + shape_.str() + " needs " +
                       std::to_string(shape_.size()) + " pixels, got " +
                       std::to_string(pixels_.size()));
  }
}

void Image::clamp_unit() {
  for (double& p : pixels_) p = std::clamp(p, 0.0, 1.0);
}

bool Image::in_unit_range() const {
  return std::all_of(pixels_.begin(), pixels_.end(),
                     [](double p) { return p >= 0.0 && p <= 1.0; });
}

bool Image::all_finite() const {
  return std::all_of(pixels_.begin(), pixels_.end(), [](double p) { return std::isfinite(p); });
}

Tensor Image::to_batch() const {
  return Tensor({1, shape_.channels, shape_.height, shape_.width}, pixels_);
}

Image Image::from_batch(const Tensor& batch, std::size_t index) {
  if (batch.rank() != 4 || index >= batch.batch()) {
    throw InvalidInput("cannot take image " + std::to_string(index) + " from tensor " +
                       batch.shape_string());
  }
  const ImageShape shape{batch.dim(1), batch.dim(2), batch.dim(3)};
  const auto begin = batch.values().begin() + static_cast<std::ptrdiff_t>(index * shape.size());
  return Image(shape, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(shape.size())));
}

}  // namespace typei
