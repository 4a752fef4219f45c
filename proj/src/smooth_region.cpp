#include "t2p/smooth_region.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "t2p/kernels.hpp"

namespace t2p {

SmoothRegionConfig SmoothRegionConfig::defaults() {
    SmoothRegionConfig cfg;
    const double sizes[] = {0.25, 0.4, 0.6, 0.8};
    for (double w : sizes) {
        for (double h : sizes) cfg.anchor_scales.emplace_back(w, h);
    }
    // Full-width bands.
    cfg.anchor_scales.emplace_back(1.0, 0.25);
    cfg.anchor_scales.emplace_back(1.0, 0.4);
    return cfg;
}

PixelRect region_pixel_rect(const AnchorRegion& r, int map_w, int map_h) {
    auto lo = [](double v, int n) { return std::max(0, static_cast<int>(std::ceil(v * n - 0.5))); };
    auto hi = [](double v, int n) { return std::min(n, static_cast<int>(std::ceil(v * n - 0.5))); };
    PixelRect px;
    px.x0 = lo(r.x0, map_w);
    px.x1 = hi(r.x1, map_w);
    px.y0 = lo(r.y0, map_h);
    px.y1 = hi(r.y1, map_h);
    if (px.x1 < px.x0) px.x1 = px.x0;
    if (px.y1 < px.y0) px.y1 = px.y0;
    return px;
}

double box_iou(const AnchorRegion& a, const AnchorRegion& b) {
    const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const double inter = ix * iy;
    const double uni = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<AnchorRegion> generate_anchors(int map_w, int map_h, const SmoothRegionConfig& cfg) {
    if (cfg.anchor_scales.empty()) throw ConfigError("generate_anchors: no anchor scales");
    if (cfg.anchor_stride <= 0.0) throw ConfigError("generate_anchors: stride must be positive");
    std::vector<AnchorRegion> anchors;
    for (const auto& [w, h] : cfg.anchor_scales) {
        if (w <= 0.0 || h <= 0.0 || w > 1.0 || h > 1.0) {
            throw ConfigError("generate_anchors: scale outside (0,1]");
        }
        for (int ky = 0;; ++ky) {
            const double y0 = ky * cfg.anchor_stride;
            if (y0 + h > 1.0 + 1e-9) break;
            for (int kx = 0;; ++kx) {
                const double x0 = kx * cfg.anchor_stride;
                if (x0 + w > 1.0 + 1e-9) break;
                AnchorRegion r{x0, y0, std::min(1.0, x0 + w), std::min(1.0, y0 + h), 0, 0.0};
                const PixelRect px = region_pixel_rect(r, map_w, map_h);
                r.pixel_count = (px.x1 - px.x0) * (px.y1 - px.y0);
                if (r.pixel_count > 0) anchors.push_back(r);
            }
        }
    }
    return anchors;
}

double score_region(const AnchorRegion& region, const SaliencyMap& saliency, double lambda) {
    const PixelRect px = region_pixel_rect(region, saliency.width, saliency.height);
    const int count = (px.x1 - px.x0) * (px.y1 - px.y0);
    if (count < 1) throw InvalidInputError("score_region: region covers no pixels");
    const int box[4] = {px.x0, px.y0, px.x1, px.y1};
    double v = 0.0;
    kernels::serial::score_boxes(saliency.values.data(), saliency.width, saliency.height, box, 1, lambda,
                                 &count, &v);
    return v;
}

std::vector<AnchorRegion> select_smooth_regions(const std::vector<AnchorRegion>& anchors,
                                                const SaliencyMap& saliency,
                                                const SmoothRegionConfig& cfg) {
    if (anchors.empty()) return {};
    const int n = static_cast<int>(anchors.size());
    std::vector<int> boxes(static_cast<size_t>(n) * 4);
    std::vector<int> counts(n);
    for (int i = 0; i < n; ++i) {
        const PixelRect px = region_pixel_rect(anchors[static_cast<size_t>(i)], saliency.width, saliency.height);
        boxes[static_cast<size_t>(i) * 4 + 0] = px.x0;
        boxes[static_cast<size_t>(i) * 4 + 1] = px.y0;
        boxes[static_cast<size_t>(i) * 4 + 2] = px.x1;
        boxes[static_cast<size_t>(i) * 4 + 3] = px.y1;
        counts[i] = (px.x1 - px.x0) * (px.y1 - px.y0);
        if (counts[i] < 1) throw InvalidInputError("select_smooth_regions: anchor covers no pixels");
    }
    std::vector<double> scores(n);
    kernels::score_boxes(saliency.values.data(), saliency.width, saliency.height, boxes.data(), n,
                         cfg.lambda, counts.data(), scores.data());

    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += scores[i];
    mean /= n;
    const double v_max = cfg.threshold_factor * mean;

    std::vector<int> order;
    for (int i = 0; i < n; ++i) {
        if (scores[i] < v_max) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });

    std::vector<AnchorRegion> kept;
    for (int idx : order) {
        AnchorRegion cand = anchors[static_cast<size_t>(idx)];
        cand.score = scores[idx];
        bool ok = true;
        for (const auto& k : kept) {
            if (box_iou(cand, k) > cfg.nms_iou) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(cand);
    }
    return kept;
}

SmoothRegionMap rasterize(const std::vector<AnchorRegion>& regions, int map_w, int map_h) {
    SmoothRegionMap map(map_w, map_h);
    for (const auto& r : regions) {
        const PixelRect px = region_pixel_rect(r, map_w, map_h);
        for (int y = px.y0; y < px.y1; ++y) {
            for (int x = px.x0; x < px.x1; ++x) map.at(x, y) = 1.0;
        }
    }
    return map;
}

SmoothRegionMap detect_smooth_regions(const SaliencyMap& saliency, const SmoothRegionConfig& cfg) {
    const auto anchors = generate_anchors(saliency.width, saliency.height, cfg);
    const auto kept = select_smooth_regions(anchors, saliency, cfg);
    return rasterize(kept, saliency.width, saliency.height);
}

RasterImage region_overlay(const RasterImage& image, const SaliencyMap& saliency,
                           const SmoothRegionMap& regions) {
    RasterImage out(image.width, image.height, 3);
    const RasterImage gray = to_grayscale(image);
    SaliencyMap sal = saliency;
    if (sal.width != image.width || sal.height != image.height) {
        sal = resize_map(sal, image.width, image.height);
    }
    SmoothRegionMap reg = regions;
    if (reg.width != image.width || reg.height != image.height) {
        reg = resize_map(reg, image.width, image.height);
    }
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const double base = 0.45 * gray.at(x, y);
            out.at(x, y, 0) = std::clamp(base + 0.55 * reg.at(x, y), 0.0, 1.0);
            out.at(x, y, 1) = base;
            out.at(x, y, 2) = std::clamp(base + 0.55 * sal.at(x, y), 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace t2p
