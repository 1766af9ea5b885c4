#include "typei/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include <png.h>

#include "typei/error.hpp"
#include "typei/metrics.hpp"

namespace typei {
namespace {

namespace fs = std::filesystem;

// 3x5 glyphs, one 3-bit row per entry, most significant bit leftmost.
struct Glyph {
  char ch;
  std::array<std::uint8_t, 5> rows;
};

constexpr Glyph kGlyphs[] = {
    {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}}, {'3', {7, 1, 7, 1, 7}},
    {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}}, {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 1, 1}},
    {'8', {7, 5, 7, 5, 7}}, {'9', {7, 5, 7, 1, 7}}, {'.', {0, 0, 0, 0, 2}}, {'-', {0, 0, 7, 0, 0}},
    {'%', {5, 1, 2, 4, 5}}, {':', {0, 2, 0, 2, 0}}, {'=', {0, 7, 0, 7, 0}},
};

const Glyph* find_glyph(char c) {
  for (const auto& g : kGlyphs)
    if (g.ch == c) return &g;
  return nullptr;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void prepare_parent(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
}

}  // namespace

void write_png(const fs::path& path, const Image& image) {
  const ImageShape s = image.shape();
  if (s.channels != 1 && s.channels != 3) {
    throw InvalidInput("PNG output needs 1 or 3 channels, got " + std::to_string(s.channels));
  }
  std::vector<png_byte> interleaved(s.size());
  for (std::size_t y = 0; y < s.height; ++y)
    for (std::size_t x = 0; x < s.width; ++x)
      for (std::size_t c = 0; c < s.channels; ++c) {
        const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        interleaved[(y * s.width + x) * s.channels + c] = static_cast<png_byte>(std::lround(v * 255.0));
      }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(s.width);
  png.height = static_cast<png_uint_32>(s.height);
  png.format = s.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  prepare_parent(path);
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, interleaved.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error("cannot write " + path.string() + ": " + msg);
  }
}

Image read_png(const fs::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw IngestionError("cannot read PNG " + path.string() + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IngestionError("corrupt PNG " + path.string() + ": " + msg);
  }
  const ImageShape shape{channels, png.height, png.width};
  Image img(shape);
  for (std::size_t y = 0; y < shape.height; ++y)
    for (std::size_t x = 0; x < shape.width; ++x)
      for (std::size_t c = 0; c < channels; ++c)
        img.at(c, y, x) = buffer[(y * shape.width + x) * channels + c] / 255.0;
  return img;
}

// ---------------------------------------------------------------- Canvas

Canvas::Canvas(std::size_t width, std::size_t height, Color background)
    : width_(width), height_(height), pixels_(ImageShape{3, height, width}) {
  fill_rect(0, 0, width, height, background);
}

void Canvas::set(std::ptrdiff_t x, std::ptrdiff_t y, const Color& c) {
  if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(width_) || y >= static_cast<std::ptrdiff_t>(height_)) return;
  for (std::size_t ch = 0; ch < 3; ++ch) pixels_.at(ch, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = c[ch];
}

void Canvas::fill_rect(std::ptrdiff_t x, std::ptrdiff_t y, std::size_t w, std::size_t h, const Color& c) {
  for (std::size_t dy = 0; dy < h; ++dy)
    for (std::size_t dx = 0; dx < w; ++dx)
      set(x + static_cast<std::ptrdiff_t>(dx), y + static_cast<std::ptrdiff_t>(dy), c);
}

void Canvas::blit(const Image& image, std::size_t x, std::size_t y, std::size_t scale) {
  const ImageShape s = image.shape();
  for (std::size_t iy = 0; iy < s.height; ++iy)
    for (std::size_t ix = 0; ix < s.width; ++ix) {
      Color c;
      for (std::size_t ch = 0; ch < 3; ++ch) c[ch] = image.at(s.channels == 1 ? 0 : ch, iy, ix);
      fill_rect(static_cast<std::ptrdiff_t>(x + ix * scale), static_cast<std::ptrdiff_t>(y + iy * scale),
                scale, scale, c);
    }
}

void Canvas::line(double x0, double y0, double x1, double y1, const Color& c) {
  const double steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1.0});
  for (int i = 0; i <= static_cast<int>(steps); ++i) {
    const double t = i / steps;
    set(std::lround(x0 + t * (x1 - x0)), std::lround(y0 + t * (y1 - y0)), c);
  }
}

std::size_t Canvas::text_width(const std::string& s, std::size_t scale) {
  return s.empty() ? 0 : (4 * s.size() - 1) * scale;
}

void Canvas::text(std::size_t x, std::size_t y, const std::string& s, const Color& c, std::size_t scale) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Glyph* g = find_glyph(s[i]);
    if (!g) continue;
    const std::size_t gx = x + i * 4 * scale;
    for (std::size_t row = 0; row < 5; ++row)
      for (std::size_t col = 0; col < 3; ++col)
        if (g->rows[row] & (4U >> col)) {
          fill_rect(static_cast<std::ptrdiff_t>(gx + col * scale), static_cast<std::ptrdiff_t>(y + row * scale),
                    scale, scale, c);
        }
  }
}

// ---------------------------------------------------------------- figures

QuadGrid render_quad_grid(const Image& x_ori, const Image& x_adv, const Image& recon_ori,
                          const Image& recon_adv, const fs::path& path, std::size_t scale) {
  const ImageShape s = x_ori.shape();
  if (x_adv.shape() != s || recon_ori.shape() != s || recon_adv.shape() != s) {
    throw InvalidInput("quad grid panels must share one shape");
  }
  if (scale == 0) throw InvalidInput("grid scale must be positive");
  constexpr std::size_t kGap = 6, kTextScale = 2;
  const std::size_t pw = s.width * scale, ph = s.height * scale;
  const std::size_t header = 5 * kTextScale + 2 * kGap;
  Canvas canvas(4 * pw + 5 * kGap, header + ph + kGap);

  QuadGrid grid;
  grid.input_rmsd = rmsd(x_ori, x_adv);
  grid.output_rmsd = rmsd(recon_ori, recon_adv);
  grid.width = canvas.width();
  grid.height = canvas.height();

  const Image* panels[] = {&x_ori, &x_adv, &recon_ori, &recon_adv};
  for (std::size_t i = 0; i < 4; ++i) canvas.blit(*panels[i], kGap + i * (pw + kGap), header, scale);
  const Color ink{0.0, 0.0, 0.0};
  for (std::size_t pair = 0; pair < 2; ++pair) {
    const std::string label = format_fixed(pair == 0 ? grid.input_rmsd : grid.output_rmsd, 3);
    const std::size_t span_left = kGap + 2 * pair * (pw + kGap);
    const std::size_t span_width = 2 * pw + kGap;
    const std::size_t tw = Canvas::text_width(label, kTextScale);
    canvas.text(span_left + (span_width > tw ? (span_width - tw) / 2 : 0), kGap, label, ink, kTextScale);
  }
  write_png(path, canvas.image());
  return grid;
}

void render_trajectory_plot(std::span<const TrajectoryPoint> trajectory, const fs::path& path,
                            bool use_deviation) {
  if (trajectory.empty()) throw InvalidInput("empty trajectory");
  constexpr std::size_t kW = 480, kH = 240, kMargin = 24;
  Canvas canvas(kW, kH);
  const Color axis{0.3, 0.3, 0.3}, blue{0.1, 0.3, 0.9}, red{0.85, 0.15, 0.1};
  canvas.line(kMargin, kH - kMargin, kW - kMargin, kH - kMargin, axis);
  canvas.line(kMargin, kMargin, kMargin, kH - kMargin, axis);

  const double last_iter = std::max<double>(static_cast<double>(trajectory.back().iteration), 1.0);
  const auto plot_series = [&](auto value_of, const Color& color) {
    double lo = value_of(trajectory.front()), hi = lo;
    for (const auto& p : trajectory) {
      lo = std::min(lo, value_of(p));
      hi = std::max(hi, value_of(p));
    }
    const double range = hi > lo ? hi - lo : 1.0;
    const double w = kW - 2.0 * kMargin, h = kH - 2.0 * kMargin;
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
      const auto& a = trajectory[i - 1];
      const auto& b = trajectory[i];
      canvas.line(kMargin + w * static_cast<double>(a.iteration) / last_iter,
                  kH - kMargin - h * (value_of(a) - lo) / range,
                  kMargin + w * static_cast<double>(b.iteration) / last_iter,
                  kH - kMargin - h * (value_of(b) - lo) / range, color);
    }
  };
  if (use_deviation) {
    plot_series([](const TrajectoryPoint& p) { return p.deviation; }, blue);
  } else {
    plot_series([](const TrajectoryPoint& p) { return p.input_distance; }, blue);
  }
  plot_series([](const TrajectoryPoint& p) { return p.output_loss; }, red);
  canvas.text(kMargin, kH - kMargin + 6, "0", axis, 2);
  const std::string end = std::to_string(trajectory.back().iteration);
  canvas.text(kW - kMargin - Canvas::text_width(end, 2), kH - kMargin + 6, end, axis, 2);
  write_png(path, canvas.image());
}

void render_bar_plot(std::span<const double> values, const fs::path& path) {
  if (values.empty()) throw InvalidInput("no bars to plot");
  constexpr std::size_t kBar = 24, kGap = 8, kH = 200, kMargin = 16;
  Canvas canvas(values.size() * (kBar + kGap) + kGap + 2 * kMargin, kH + 2 * kMargin);
  const double top = std::max(*std::max_element(values.begin(), values.end()), 1e-12);
  const Color fill{0.2, 0.45, 0.75}, ink{0.0, 0.0, 0.0};
  const std::size_t plot_h = kH - 24;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto h = static_cast<std::size_t>(std::lround(std::max(values[i], 0.0) / top * static_cast<double>(plot_h)));
    const std::size_t x = kMargin + kGap + i * (kBar + kGap);
    canvas.fill_rect(static_cast<std::ptrdiff_t>(x), static_cast<std::ptrdiff_t>(kMargin + kH - h), kBar, h, fill);
    canvas.text(x, kMargin + kH - h - 12 > kMargin ? kMargin + kH - h - 12 : kMargin,
                std::to_string(std::lround(values[i])), ink, 1);
  }
  write_png(path, canvas.image());
}

}  // namespace typei
