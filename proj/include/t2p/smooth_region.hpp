#pragma once

#include <vector>

#include "t2p/image.hpp"

namespace t2p {

// Candidate region in normalized coordinates with its pixel footprint at map
// resolution and its smoothness score v = (lambda + sum S) / |pixels|.
struct AnchorRegion {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int pixel_count = 0;
    double score = 0.0;
};

struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // [x0,x1) x [y0,y1)
};

struct SmoothRegionConfig {
    double lambda = 5.0;
    double threshold_factor = 1.4;  // v_max = 1.4 * mean{v_i}
    std::vector<std::pair<double, double>> anchor_scales;  // (w,h) normalized
    double anchor_stride = 0.1;
    double nms_iou = 0.05;

    static SmoothRegionConfig defaults();
};

// A pixel belongs to a region iff its center lies inside [x0,x1) x [y0,y1).
PixelRect region_pixel_rect(const AnchorRegion& r, int map_w, int map_h);

double box_iou(const AnchorRegion& a, const AnchorRegion& b);

// Full grid per scale: positions k*stride while the box fits in the unit
// square; anchors with an empty pixel footprint are dropped.
std::vector<AnchorRegion> generate_anchors(int map_w, int map_h, const SmoothRegionConfig& cfg);

// Exactly (lambda + sum of S over the region's pixels) / pixel_count.
double score_region(const AnchorRegion& region, const SaliencyMap& saliency, double lambda);

// Scores all anchors, keeps v < threshold_factor * mean{v}, then greedy NMS
// ascending by score (ties by index); kept set is pairwise IoU <= nms_iou.
std::vector<AnchorRegion> select_smooth_regions(const std::vector<AnchorRegion>& anchors,
                                                const SaliencyMap& saliency,
                                                const SmoothRegionConfig& cfg);

// Union of the selected regions' pixel footprints.
SmoothRegionMap rasterize(const std::vector<AnchorRegion>& regions, int map_w, int map_h);

// anchors -> select -> rasterize.
SmoothRegionMap detect_smooth_regions(const SaliencyMap& saliency, const SmoothRegionConfig& cfg);

// Debug art for the CLI: image dimmed to gray, saliency in blue, smooth
// region in red.
RasterImage region_overlay(const RasterImage& image, const SaliencyMap& saliency,
                           const SmoothRegionMap& regions);

}  // namespace t2p
