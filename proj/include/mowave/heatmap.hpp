#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <mowave/imaging.hpp>
#include <mowave/scene.hpp>

namespace mowave {

using Rgb = std::array<std::uint8_t, 3>;

/// Fixed colormap: piecewise linear (0,0,128) -> (0,255,0) -> (255,255,0)
/// over [0, 0.5, 1]. Values outside [0, 1] are clamped; NaN maps to black.
Rgb colormap(double value);

struct Overlay {
  std::vector<std::vector<Vec3>> polylines;  ///< boundaries and emitter path
  std::vector<Vec3> markers;                 ///< receivers
};

struct HeatmapOptions {
  int cell_px = 1;    ///< pixels per grid point along each axis
  int margin_px = 0;  ///< border around each data region
  const Overlay* overlay = nullptr;
};

/// Raster of a heatmap, row-major RGB, first row at the top.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Rgb at(int x, int y) const;
};

/// Paint an image (normalized on the fly if needed). A 2-D image maps axis 0
/// to the horizontal and axis 1 upward; a 3-D image becomes three mid-slices
/// (xy, xz, yz) side by side.
RgbImage render_image(const IndicatorImage& img, const HeatmapOptions& options = {});

void write_png(const RgbImage& image, const std::filesystem::path& path);

void render_heatmap(const IndicatorImage& img, const std::filesystem::path& path,
                    const HeatmapOptions& options = {});

}  // namespace mowave
