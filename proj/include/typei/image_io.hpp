#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "typei/attack_types.hpp"
#include "typei/tensor.hpp"

namespace typei {

// 8-bit PNG, gray for one channel and RGB for three.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

using Color = std::array<double, 3>;

// RGB raster used for grids and plots.
class Canvas {
 public:
  Canvas(std::size_t width, std::size_t height, Color background = {1.0, 1.0, 1.0});

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }

  void set(std::ptrdiff_t x, std::ptrdiff_t y, const Color& c);
  // Draws `image` with its top-left corner at (x, y), each pixel as scale x scale block.
  void blit(const Image& image, std::size_t x, std::size_t y, std::size_t scale);
  void fill_rect(std::ptrdiff_t x, std::ptrdiff_t y, std::size_t w, std::size_t h, const Color& c);
  void line(double x0, double y0, double x1, double y1, const Color& c);
  // 3x5 bitmap glyphs for digits, '.', '-', '%', ':' and '='; other characters are blank.
  void text(std::size_t x, std::size_t y, const std::string& s, const Color& c, std::size_t scale);
  static std::size_t text_width(const std::string& s, std::size_t scale);

  const Image& image() const { return pixels_; }

 private:
  std::size_t width_, height_;
  Image pixels_;
};

struct QuadGrid {
  double input_rmsd = 0.0;   // annotated above panels a-b
  double output_rmsd = 0.0;  // annotated above panels c-d
  std::size_t width = 0;
  std::size_t height = 0;
};

// Four panels left to right: a. original, b. adversarial example,
// c. reconstruction of the original, d. reconstruction of the adversarial.
// RMSD(a, b) is printed above the first pair and RMSD(c, d) above the second.
QuadGrid render_quad_grid(const Image& x_ori, const Image& x_adv, const Image& recon_ori,
                          const Image& recon_adv, const std::filesystem::path& path,
                          std::size_t scale = 4);

// Two series against iteration, each scaled to its own range: deviation (or
// input distance) in blue, output loss in red.
void render_trajectory_plot(std::span<const TrajectoryPoint> trajectory,
                            const std::filesystem::path& path, bool use_deviation);

// One bar per entry, labelled with its value rounded to an integer.
void render_bar_plot(std::span<const double> values, const std::filesystem::path& path);

}  // namespace typei
