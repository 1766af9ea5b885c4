#include "typei/nn.hpp"

#include <cmath>

#include "typei/error.hpp"

namespace typei::nn {
namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
  return m;
}

void require_rank4(const Tensor& x, const char* who) {
  if (x.rank() != 4) throw InvalidInput(std::string(who) + " expects (N, C, H, W), got " + x.shape_string());
}

// (C, N*P) matrix from (N, C, H, W) with P = H*W.
Matrix channels_by_positions(const Tensor& x) {
  const std::size_t n = x.dim(0), c = x.dim(1), p = x.dim(2) * x.dim(3);
  Matrix out(c, n * p);
  for (std::size_t i = 0; i < n; ++i) {
    out.middleCols(static_cast<Eigen::Index>(i * p), static_cast<Eigen::Index>(p)) =
        Eigen::Map<const RowMatrix>(x.data() + i * c * p, static_cast<Eigen::Index>(c),
                                    static_cast<Eigen::Index>(p));
  }
  return out;
}

// Inverse of channels_by_positions, adding a per-channel bias.
Tensor to_nchw(const Matrix& m, std::size_t n, std::size_t h, std::size_t w, const Matrix* bias) {
  const std::size_t c = static_cast<std::size_t>(m.rows()), p = h * w;
  Tensor y({n, c, h, w});
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Map<RowMatrix> block(y.data() + i * c * p, static_cast<Eigen::Index>(c),
                                static_cast<Eigen::Index>(p));
    block = m.middleCols(static_cast<Eigen::Index>(i * p), static_cast<Eigen::Index>(p));
    if (bias) block.colwise() += bias->col(0);
  }
  return y;
}

void accumulate_bias(const Tensor& gy, Matrix& grad) {
  const std::size_t n = gy.dim(0), c = gy.dim(1), p = gy.dim(2) * gy.dim(3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* row = gy.data() + (i * c + ch) * p;
      double s = 0.0;
      for (std::size_t k = 0; k < p; ++k) s += row[k];
      grad(static_cast<Eigen::Index>(ch), 0) += s;
    }
}

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in, std::size_t out, std::mt19937_64& rng, double gain)
    : weight(random_matrix(out, in, gain / std::sqrt(static_cast<double>(in)), rng)),
      bias(Matrix::Zero(static_cast<Eigen::Index>(out), 1)) {}

Tensor Dense::forward(const Tensor& x) const {
  const auto n = static_cast<Eigen::Index>(x.batch());
  if (static_cast<Eigen::Index>(x.sample_size()) != weight.cols()) {
    throw InvalidInput("dense layer expects " + std::to_string(weight.cols()) +
                       " features per sample, got tensor " + x.shape_string());
  }
  Tensor y({x.batch(), static_cast<std::size_t>(weight.rows())});
  Eigen::Map<const RowMatrix> in(x.data(), n, weight.cols());
  Eigen::Map<RowMatrix> out(y.data(), n, weight.rows());
  out.noalias() = in * weight.transpose();
  out.rowwise() += bias.col(0).transpose();
  return y;
}

Tensor Dense::backward(const Tensor& x, const Tensor&, const Tensor& gy,
                       std::span<Matrix> grads) const {
  const auto n = static_cast<Eigen::Index>(x.batch());
  Eigen::Map<const RowMatrix> g(gy.data(), n, weight.rows());
  Tensor gx(x.shape());
  Eigen::Map<RowMatrix>(gx.data(), n, weight.cols()).noalias() = g * weight;
  if (!grads.empty()) {
    Eigen::Map<const RowMatrix> in(x.data(), n, weight.cols());
    grads[0].noalias() += g.transpose() * in;
    grads[1] += g.colwise().sum().transpose();
  }
  return gx;
}

// ---------------------------------------------------------------- im2col

Matrix im2col(const Tensor& x, const ConvGeometry& g) {
  require_rank4(x, "im2col");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t k = g.kernel, ho = g.output_extent(h), wo = g.output_extent(w);
  const std::size_t rows = c * k * k, p = ho * wo;
  Matrix cols = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n * p));
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t i = 0; i < n; ++i) {
    const double* img = x.data() + i * c * h * w;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double* dst = cols.data() + (i * p + oy * wo + ox) * rows;
        for (std::size_t ch = 0; ch < c; ++ch) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            const double* src = img + (ch * h + static_cast<std::size_t>(iy)) * w;
            double* row = dst + (ch * k + ky) * k;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
              if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w)) row[kx] = src[ix];
            }
          }
        }
      }
    }
  }
  return cols;
}

Tensor col2im(const Matrix& cols, std::size_t n, std::size_t c, std::size_t h, std::size_t w,
              const ConvGeometry& g) {
  const std::size_t k = g.kernel, ho = g.output_extent(h), wo = g.output_extent(w);
  const std::size_t rows = c * k * k, p = ho * wo;
  if (static_cast<std::size_t>(cols.rows()) != rows ||
      static_cast<std::size_t>(cols.cols()) != n * p) {
    throw InvalidInput("col2im: patch matrix does not match the requested geometry");
  }
  Tensor x({n, c, h, w});
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t i = 0; i < n; ++i) {
    double* img = x.data() + i * c * h * w;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        const double* src = cols.data() + (i * p + oy * wo + ox) * rows;
        for (std::size_t ch = 0; ch < c; ++ch) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            double* dst = img + (ch * h + static_cast<std::size_t>(iy)) * w;
            const double* row = src + (ch * k + ky) * k;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
              if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w)) dst[ix] += row[kx];
            }
          }
        }
      }
    }
  }
  return x;
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::size_t in, std::size_t out, ConvGeometry g, std::mt19937_64& rng, double gain)
    : in_channels(in),
      out_channels(out),
      geometry(g),
      weight(random_matrix(out, in * g.kernel * g.kernel,
                           gain / std::sqrt(static_cast<double>(in * g.kernel * g.kernel)), rng)),
      bias(Matrix::Zero(static_cast<Eigen::Index>(out), 1)) {}

Tensor Conv2d::forward(const Tensor& x) const {
  require_rank4(x, "conv2d");
  if (x.dim(1) != in_channels) throw InvalidInput("conv2d channel mismatch: " + x.shape_string());
  const Matrix cols = im2col(x, geometry);
  const Matrix out = weight * cols;
  return to_nchw(out, x.dim(0), geometry.output_extent(x.dim(2)),
                 geometry.output_extent(x.dim(3)), &bias);
}

Tensor Conv2d::backward(const Tensor& x, const Tensor&, const Tensor& gy,
                        std::span<Matrix> grads) const {
  const Matrix g = channels_by_positions(gy);
  if (!grads.empty()) {
    grads[0].noalias() += g * im2col(x, geometry).transpose();
    accumulate_bias(gy, grads[1]);
  }
  const Matrix gcols = weight.transpose() * g;
  return col2im(gcols, x.dim(0), x.dim(1), x.dim(2), x.dim(3), geometry);
}

// ---------------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(std::size_t in, std::size_t out, ConvGeometry g,
                                 std::mt19937_64& rng, double gain)
    : in_channels(in),
      out_channels(out),
      geometry(g),
      weight(random_matrix(
          in, out * g.kernel * g.kernel,
          gain / std::sqrt(static_cast<double>(in * g.kernel * g.kernel) /
                           static_cast<double>(g.stride * g.stride)),
          rng)),
      bias(Matrix::Zero(static_cast<Eigen::Index>(out), 1)) {}

Tensor ConvTranspose2d::forward(const Tensor& x) const {
  require_rank4(x, "conv_transpose2d");
  if (x.dim(1) != in_channels) {
    throw InvalidInput("conv_transpose2d channel mismatch: " + x.shape_string());
  }
  const std::size_t ho = geometry.transposed_extent(x.dim(2));
  const std::size_t wo = geometry.transposed_extent(x.dim(3));
  const Matrix cols = weight.transpose() * channels_by_positions(x);
  Tensor y = col2im(cols, x.dim(0), out_channels, ho, wo, geometry);
  const std::size_t p = ho * wo;
  for (std::size_t i = 0; i < x.dim(0); ++i)
    for (std::size_t c = 0; c < out_channels; ++c) {
      double* row = y.data() + (i * out_channels + c) * p;
      const double b = bias(static_cast<Eigen::Index>(c), 0);
      for (std::size_t k = 0; k < p; ++k) row[k] += b;
    }
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& x, const Tensor&, const Tensor& gy,
                                 std::span<Matrix> grads) const {
  const Matrix gcols = im2col(gy, geometry);
  if (!grads.empty()) {
    grads[0].noalias() += channels_by_positions(x) * gcols.transpose();
    accumulate_bias(gy, grads[1]);
  }
  const Matrix gx = weight * gcols;
  return to_nchw(gx, x.dim(0), x.dim(2), x.dim(3), nullptr);
}

// ---------------------------------------------------------------- Activation

Tensor Activation::forward(const Tensor& x) const {
  Tensor y(x.shape());
  const std::size_t n = x.size();
  switch (kind) {
    case ActivationKind::relu:
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    case ActivationKind::leaky_relu:
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
      break;
    case ActivationKind::sigmoid:
      for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
      break;
    case ActivationKind::tanh:
      for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
      break;
  }
  return y;
}

Tensor Activation::backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                            std::span<Matrix>) const {
  Tensor gx(x.shape());
  const std::size_t n = x.size();
  switch (kind) {
    case ActivationKind::relu:
      for (std::size_t i = 0; i < n; ++i) gx[i] = x[i] > 0.0 ? gy[i] : 0.0;
      break;
    case ActivationKind::leaky_relu:
      for (std::size_t i = 0; i < n; ++i) gx[i] = x[i] > 0.0 ? gy[i] : slope * gy[i];
      break;
    case ActivationKind::sigmoid:
      for (std::size_t i = 0; i < n; ++i) gx[i] = gy[i] * y[i] * (1.0 - y[i]);
      break;
    case ActivationKind::tanh:
      for (std::size_t i = 0; i < n; ++i) gx[i] = gy[i] * (1.0 - y[i] * y[i]);
      break;
  }
  return gx;
}

// ---------------------------------------------------------------- Reshape / Upsample

Tensor Reshape::forward(const Tensor& x) const {
  std::vector<std::size_t> shape{x.batch()};
  shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  if (shape_size(shape) != x.size()) {
    throw InvalidInput("cannot reshape " + x.shape_string() + " per sample");
  }
  return x.reshaped(std::move(shape));
}

Tensor Reshape::backward(const Tensor& x, const Tensor&, const Tensor& gy,
                         std::span<Matrix>) const {
  return gy.reshaped(x.shape());
}

Tensor Upsample2x::forward(const Tensor& x) const {
  require_rank4(x, "upsample");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({x.dim(0), x.dim(1), 2 * h, 2 * w});
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.data() + p * h * w;
    double* dst = y.data() + p * 4 * h * w;
    for (std::size_t i = 0; i < 2 * h; ++i)
      for (std::size_t j = 0; j < 2 * w; ++j) dst[i * 2 * w + j] = src[(i / 2) * w + j / 2];
  }
  return y;
}

Tensor Upsample2x::backward(const Tensor& x, const Tensor&, const Tensor& gy,
                            std::span<Matrix>) const {
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor gx(x.shape());
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = gy.data() + p * 4 * h * w;
    double* dst = gx.data() + p * h * w;
    for (std::size_t i = 0; i < 2 * h; ++i)
      for (std::size_t j = 0; j < 2 * w; ++j) dst[(i / 2) * w + j / 2] += src[i * 2 * w + j];
  }
  return gx;
}

// ---------------------------------------------------------------- Sequential

Tensor Sequential::forward(const Tensor& x) const {
  Tensor h = x;
  for (const auto& layer : layers_) {
    h = std::visit([&](const auto& l) { return l.forward(h); }, layer);
  }
  return h;
}

Tensor Sequential::forward(const Tensor& x, std::vector<Tensor>& trace) const {
  trace.clear();
  trace.reserve(layers_.size() + 1);
  trace.push_back(x);
  for (const auto& layer : layers_) {
    trace.push_back(std::visit([&](const auto& l) { return l.forward(trace.back()); }, layer));
  }
  return trace.back();
}

Tensor Sequential::backward(const std::vector<Tensor>& trace, const Tensor& gy,
                            std::span<Matrix> grads, std::size_t end) const {
  if (trace.size() != layers_.size() + 1) throw InvalidInput("trace does not match network depth");
  if (end == npos) end = layers_.size();
  if (end > layers_.size()) throw InvalidInput("backward start beyond network depth");
  std::vector<std::size_t> offsets(layers_.size() + 1, 0);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    offsets[i + 1] =
        offsets[i] + std::visit([](const auto& l) { return l.parameters().size(); }, layers_[i]);
  }
  Tensor g = gy;
  for (std::size_t i = end; i-- > 0;) {
    std::span<Matrix> slice =
        grads.empty() ? std::span<Matrix>{} : grads.subspan(offsets[i], offsets[i + 1] - offsets[i]);
    g = std::visit([&](const auto& l) { return l.backward(trace[i], trace[i + 1], g, slice); },
                   layers_[i]);
  }
  return g;
}

std::vector<Matrix*> Sequential::parameters() {
  std::vector<Matrix*> out;
  for (auto& layer : layers_) {
    auto p = std::visit([](auto& l) { return l.parameters(); }, layer);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<const Matrix*> Sequential::parameters() const {
  std::vector<const Matrix*> out;
  for (const auto& layer : layers_) {
    auto p = std::visit([](const auto& l) { return l.parameters(); }, layer);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<std::string> Sequential::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto count = std::visit([](const auto& l) { return l.parameters().size(); }, layers_[i]);
    if (count == 2) {
      names.push_back(std::to_string(i) + ".weight");
      names.push_back(std::to_string(i) + ".bias");
    }
  }
  return names;
}

std::vector<Matrix> Sequential::zero_gradients() const {
  std::vector<Matrix> grads;
  for (const Matrix* p : parameters()) grads.push_back(Matrix::Zero(p->rows(), p->cols()));
  return grads;
}

// ---------------------------------------------------------------- Adam

void Adam::step(const std::vector<Matrix*>& params, std::span<const Matrix> grads) {
  if (params.size() != grads.size()) throw InvalidInput("adam: gradient count mismatch");
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseAbs2();
    params[i]->array() -=
        lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

}  // namespace typei::nn
