#include <mowave/heatmap.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include <mowave/errors.hpp>

namespace mowave {

namespace {

constexpr Rgb kMarginColor{255, 255, 255};
constexpr Rgb kLineColor{255, 255, 255};
constexpr Rgb kMarkerColor{255, 0, 0};

std::uint8_t channel(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

struct Canvas {
  RgbImage& img;
  void set(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    std::uint8_t* p = img.pixels.data() + 3 * (static_cast<std::size_t>(y) * img.width + x);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
};

/// Pixel placement of one planar panel: grid axes (a, b) drawn with a to the
/// right and b upward, data region starting at (x0, y0).
struct PanelMap {
  int x0, y0;
  int na, nb;
  int cell;
  double lo_a, lo_b, da, db;

  bool contains(double px, double py) const {
    return px >= x0 && py >= y0 && px < x0 + na * cell && py < y0 + nb * cell;
  }
  std::pair<double, double> to_pixel(double a, double b) const {
    const double fa = da > 0 ? (a - lo_a) / da : 0.0;
    const double fb = db > 0 ? (b - lo_b) / db : 0.0;
    return {x0 + (fa + 0.5) * cell, y0 + (nb - 1 - fb + 0.5) * cell};
  }
};

void draw_overlay(Canvas& canvas, const PanelMap& map, const Overlay& overlay) {
  auto plot = [&](double px, double py, const Rgb& c) {
    if (map.contains(px, py)) canvas.set(static_cast<int>(px), static_cast<int>(py), c);
  };
  for (const auto& line : overlay.polylines) {
    for (std::size_t m = 0; m + 1 < line.size(); ++m) {
      const auto [ax, ay] = map.to_pixel(line[m].x, line[m].y);
      const auto [bx, by] = map.to_pixel(line[m + 1].x, line[m + 1].y);
      const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(bx - ax), std::abs(by - ay)))));
      for (int s = 0; s <= steps; ++s) {
        const double w = static_cast<double>(s) / steps;
        plot(ax + w * (bx - ax), ay + w * (by - ay), kLineColor);
      }
    }
  }
  for (const Vec3& p : overlay.markers) {
    const auto [px, py] = map.to_pixel(p.x, p.y);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) plot(px + dx, py + dy, kMarkerColor);
    }
  }
}

}  // namespace

Rgb colormap(double v) {
  if (std::isnan(v)) return {0, 0, 0};
  v = std::clamp(v, 0.0, 1.0);
  if (v <= 0.5) {
    const double t = 2.0 * v;
    return {0, channel(255.0 * t), channel(128.0 * (1.0 - t))};
  }
  const double t = 2.0 * v - 1.0;
  return {channel(255.0 * t), 255, 0};
}

Rgb RgbImage::at(int x, int y) const {
  const std::uint8_t* p = pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  return {p[0], p[1], p[2]};
}

RgbImage render_image(const IndicatorImage& input, const HeatmapOptions& options) {
  if (options.cell_px < 1 || options.margin_px < 0) {
    throw ConfigError("cell size must be positive and margin nonnegative", "render");
  }
  const IndicatorImage img = input.normalized ? input : normalize_image(input);
  const SamplingGrid& g = img.grid;
  const auto& n = g.counts();
  const int cell = options.cell_px;
  const int margin = options.margin_px;

  // Each panel shows grid axes (a, b) with the remaining axis fixed.
  struct Slice {
    int a, b, fixed_axis, fixed_index;
  };
  std::vector<Slice> slices;
  if (g.dimension() == 2) {
    slices.push_back({0, 1, 2, 0});
  } else {
    slices.push_back({0, 1, 2, n[2] / 2});
    slices.push_back({0, 2, 1, n[1] / 2});
    slices.push_back({1, 2, 0, n[0] / 2});
  }

  RgbImage out;
  out.width = margin;
  int tallest = 0;
  for (const Slice& s : slices) {
    out.width += n[s.a] * cell + margin;
    tallest = std::max(tallest, n[s.b] * cell);
  }
  out.height = tallest + 2 * margin;
  out.pixels.assign(static_cast<std::size_t>(out.width) * out.height * 3, 0);
  Canvas canvas{out};
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) canvas.set(x, y, kMarginColor);
  }

  int x0 = margin;
  for (const Slice& s : slices) {
    const int na = n[s.a];
    const int nb = n[s.b];
    for (int ib = 0; ib < nb; ++ib) {
      for (int ia = 0; ia < na; ++ia) {
        std::array<int, 3> idx{0, 0, 0};
        idx[s.a] = ia;
        idx[s.b] = ib;
        idx[s.fixed_axis] = s.fixed_index;
        const Rgb color = colormap(img.values[g.linear(idx)]);
        const int px = x0 + ia * cell;
        const int py = margin + (nb - 1 - ib) * cell;
        for (int dy = 0; dy < cell; ++dy) {
          for (int dx = 0; dx < cell; ++dx) canvas.set(px + dx, py + dy, color);
        }
      }
    }
    if (options.overlay && g.dimension() == 2) {
      const PanelMap map{x0, margin, na, nb, cell, g.lo()[s.a], g.lo()[s.b], g.spacing(s.a),
                         g.spacing(s.b)};
      draw_overlay(canvas, map, *options.overlay);
    }
    x0 += na * cell + margin;
  }
  return out;
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to write " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() + 3 * static_cast<std::size_t>(y) * image.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void render_heatmap(const IndicatorImage& img, const std::filesystem::path& path,
                    const HeatmapOptions& options) {
  write_png(render_image(img, options), path);
}

}  // namespace mowave
