#pragma once

#include "t2p/image.hpp"

namespace t2p {

struct SaliencyConfig {
    int working_width = 64;       // spectrum computed at this width, aspect kept
    int box_filter = 3;           // log-amplitude smoothing window
    double sigma_divisor = 64.0;  // gaussian sigma = working_width / sigma_divisor
};

// Spectral-residual saliency. Pipeline: grayscale -> downscale to the working
// width -> 2-D FFT -> log-amplitude -> residual against its box-filtered mean
// -> inverse FFT with residual amplitude and original phase -> squared
// magnitude -> gaussian blur -> min-max normalize -> upscale to input dims.
//
// The DC bin is excluded from the reconstruction (and filled neutrally in the
// log-amplitude plane), which makes the map exactly invariant to intensity
// shifts; a constant image yields the all-zero map via the degenerate
// normalization guard.
SaliencyMap spectral_residual(const RasterImage& image, const SaliencyConfig& cfg = {});

}  // namespace t2p
