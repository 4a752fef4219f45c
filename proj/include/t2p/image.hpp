#pragma once

#include <filesystem>
#include <vector>

#include "t2p/errors.hpp"

namespace t2p {

// Interleaved row-major raster, values in [0,1], 1 or 3 channels (RGB).
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> values;

    RasterImage() = default;
    RasterImage(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          values(static_cast<size_t>(w) * h * c, fill) {}

    double& at(int x, int y, int c = 0) {
        return values[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return values[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool valid() const;
    void clamp01();
    // Snaps values to the 8-bit lattice,
    // so the in-memory image equals its PNG round-trip.
    void quantize8();
};

// Strong per-pixel map types over one shared layout.
template <class Tag>
struct PixelMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    PixelMap() = default;
    PixelMap(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

    double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return values.size(); }
};

using SaliencyMap = PixelMap<struct SaliencyTag>;
using SmoothRegionMap = PixelMap<struct SmoothRegionTag>;
using LayoutDistribution = PixelMap<struct LayoutDistributionTag>;

// PNG/JPEG decode into RGB or grayscale [0,1].
RasterImage load_image(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const RasterImage& img);

template <class Tag>
RasterImage map_to_image(const PixelMap<Tag>& m) {
    RasterImage img(m.width, m.height, 1);
    img.values = m.values;
    return img;
}

// Area-downscale / bilinear-upscale resize.
RasterImage resize(const RasterImage& img, int new_w, int new_h);

template <class Tag>
PixelMap<Tag> resize_map(const PixelMap<Tag>& m, int new_w, int new_h) {
    RasterImage tmp(m.width, m.height, 1);
    tmp.values = m.values;
    tmp = resize(tmp, new_w, new_h);
    PixelMap<Tag> out(new_w, new_h);
    out.values = std::move(tmp.values);
    return out;
}

// Rec.601 luma (0.299/0.587/0.114).
RasterImage to_grayscale(const RasterImage& img);

}  // namespace t2p
