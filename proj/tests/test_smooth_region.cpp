#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "t2p/smooth_region.hpp"
#include "test_util.hpp"

using namespace t2p;

namespace {

SaliencyMap random_saliency(int w, int h, Rng& rng) {
    SaliencyMap m(w, h);
    for (auto& v : m.values) v = rng.uniform();
    return m;
}

// Test-local re-statement of the anchor grid rule.
std::vector<AnchorRegion> enumerate_anchors(int map_w, int map_h, const SmoothRegionConfig& cfg) {
    std::vector<AnchorRegion> out;
    for (const auto& [w, h] : cfg.anchor_scales) {
        for (int ky = 0; ky * cfg.anchor_stride + h <= 1.0 + 1e-9; ++ky) {
            for (int kx = 0; kx * cfg.anchor_stride + w <= 1.0 + 1e-9; ++kx) {
                AnchorRegion r{kx * cfg.anchor_stride, ky * cfg.anchor_stride,
                               std::min(1.0, kx * cfg.anchor_stride + w),
                               std::min(1.0, ky * cfg.anchor_stride + h), 0, 0.0};
                const auto px = region_pixel_rect(r, map_w, map_h);
                r.pixel_count = (px.x1 - px.x0) * (px.y1 - px.y0);
                if (r.pixel_count > 0) out.push_back(r);
            }
        }
    }
    return out;
}

// Brute-force score -> threshold -> ascending greedy NMS, written straight
// from the definitions.
std::vector<AnchorRegion> brute_force_select(const std::vector<AnchorRegion>& anchors,
                                             const SaliencyMap& sal, const SmoothRegionConfig& cfg) {
    std::vector<double> scores;
    for (const auto& a : anchors) scores.push_back(score_region(a, sal, cfg.lambda));
    double mean = 0.0;
    for (double v : scores) mean += v;
    mean /= static_cast<double>(scores.size());
    const double v_max = cfg.threshold_factor * mean;
    std::vector<int> idx;
    for (size_t i = 0; i < anchors.size(); ++i) {
        if (scores[i] < v_max) idx.push_back(static_cast<int>(i));
    }
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)]) {
            return scores[static_cast<size_t>(a)] < scores[static_cast<size_t>(b)];
        }
        return a < b;
    });
    std::vector<AnchorRegion> kept;
    for (int i : idx) {
        bool ok = true;
        for (const auto& k : kept) {
            if (box_iou(anchors[static_cast<size_t>(i)], k) > cfg.nms_iou) {
                ok = false;
                break;
            }
        }
        if (ok) {
            auto r = anchors[static_cast<size_t>(i)];
            r.score = scores[static_cast<size_t>(i)];
            kept.push_back(r);
        }
    }
    return kept;
}

bool same_region(const AnchorRegion& a, const AnchorRegion& b) {
    return a.x0 == b.x0 && a.y0 == b.y0 && a.x1 == b.x1 && a.y1 == b.y1 && a.score == b.score;
}

std::vector<AnchorRegion> random_anchors(int n, Rng& rng) {
    std::vector<AnchorRegion> anchors;
    for (int i = 0; i < n; ++i) {
        AnchorRegion r;
        r.x0 = rng.uniform(0.0, 0.7);
        r.y0 = rng.uniform(0.0, 0.7);
        r.x1 = r.x0 + rng.uniform(0.1, 1.0 - r.x0);
        r.y1 = r.y0 + rng.uniform(0.1, 1.0 - r.y0);
        anchors.push_back(r);
    }
    return anchors;
}

}  // namespace

TEST_SUITE("smooth_region") {

TEST_CASE("single (0.5,0.5) scale at stride 0.5 tiles the unit square with 4 anchors") {
    SmoothRegionConfig cfg;
    cfg.anchor_scales = {{0.5, 0.5}};
    cfg.anchor_stride = 0.5;
    const auto anchors = generate_anchors(60, 80, cfg);
    REQUIRE(anchors.size() == 4);
    double area = 0.0;
    for (const auto& a : anchors) area += (a.x1 - a.x0) * (a.y1 - a.y0);
    CHECK(area == doctest::Approx(1.0));
    CHECK(anchors[0].pixel_count == 30 * 40);
}

TEST_CASE("two scales: anchor count is the sum of per-scale grids") {
    SmoothRegionConfig one, two;
    one.anchor_scales = {{0.5, 0.5}};
    one.anchor_stride = two.anchor_stride = 0.25;
    two.anchor_scales = {{0.5, 0.5}, {0.25, 0.75}};
    const auto n1 = generate_anchors(40, 40, one).size();
    SmoothRegionConfig only_second;
    only_second.anchor_scales = {{0.25, 0.75}};
    only_second.anchor_stride = 0.25;
    const auto n2 = generate_anchors(40, 40, only_second).size();
    CHECK(generate_anchors(40, 40, two).size() == n1 + n2);
}

TEST_CASE("default config on a 60x80 map matches the enumeration oracle") {
    const auto cfg = SmoothRegionConfig::defaults();
    const auto got = generate_anchors(60, 80, cfg);
    const auto want = enumerate_anchors(60, 80, cfg);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].x0 == want[i].x0);
        CHECK(got[i].y0 == want[i].y0);
        CHECK(got[i].x1 == want[i].x1);
        CHECK(got[i].y1 == want[i].y1);
        CHECK(got[i].pixel_count == want[i].pixel_count);
    }
}

TEST_CASE("score: zero saliency, 100-pixel region, lambda 2 -> 0.02") {
    SaliencyMap sal(60, 80, 0.0);
    const AnchorRegion r{0.0, 0.0, 10.0 / 60.0, 10.0 / 80.0, 100, 0.0};
    const auto px = region_pixel_rect(r, 60, 80);
    REQUIRE((px.x1 - px.x0) * (px.y1 - px.y0) == 100);
    CHECK(score_region(r, sal, 2.0) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("score: uniform 0.5 saliency with lambda 0 -> 0.5") {
    SaliencyMap sal(60, 80, 0.5);
    const AnchorRegion r{0.1, 0.2, 0.7, 0.9, 0, 0.0};
    CHECK(score_region(r, sal, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("score matches direct summation to 1e-9") {
    Rng rng(41);
    const auto sal = random_saliency(60, 80, rng);
    for (int trial = 0; trial < 50; ++trial) {
        AnchorRegion r;
        r.x0 = rng.uniform(0.0, 0.8);
        r.y0 = rng.uniform(0.0, 0.8);
        r.x1 = r.x0 + rng.uniform(0.05, 1.0 - r.x0);
        r.y1 = r.y0 + rng.uniform(0.05, 1.0 - r.y0);
        const double lambda = rng.uniform(0.0, 8.0);
        const auto px = region_pixel_rect(r, sal.width, sal.height);
        const int count = (px.x1 - px.x0) * (px.y1 - px.y0);
        if (count < 1) continue;
        double acc = 0.0;
        for (int y = px.y0; y < px.y1; ++y) {
            for (int x = px.x0; x < px.x1; ++x) acc += sal.at(x, y);
        }
        const double want = (lambda + acc) / count;
        CHECK(std::abs(score_region(r, sal, lambda) - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("score: empty region is invalid input") {
    SaliencyMap sal(60, 80, 0.5);
    const AnchorRegion r{0.5, 0.5, 0.5001, 0.5001, 0, 0.0};
    CHECK_THROWS_AS(score_region(r, sal, 1.0), InvalidInputError);
}

TEST_CASE("selection: identical scores all pass the 1.4x threshold; NMS keeps a non-overlapping subset") {
    SaliencyMap sal(40, 40, 0.3);
    SmoothRegionConfig cfg;
    cfg.anchor_scales = {{0.5, 0.5}};
    cfg.anchor_stride = 0.25;
    cfg.lambda = 0.0;
    cfg.nms_iou = 0.05;
    const auto anchors = generate_anchors(40, 40, cfg);
    const auto kept = brute_force_select(anchors, sal, cfg);
    const auto got = select_smooth_regions(anchors, sal, cfg);
    REQUIRE(got.size() == kept.size());
    CHECK(got.size() >= 1);
    for (size_t i = 0; i < got.size(); ++i) CHECK(same_region(got[i], kept[i]));
    for (size_t i = 0; i < got.size(); ++i) {
        for (size_t j = i + 1; j < got.size(); ++j) {
            CHECK(box_iou(got[i], got[j]) <= cfg.nms_iou);
        }
    }
}

TEST_CASE("selection equals the brute-force greedy oracle on random instances") {
    Rng rng(42);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 5 + rng.uniform_int(46);
        const auto anchors = random_anchors(n, rng);
        const auto sal = random_saliency(30, 40, rng);
        SmoothRegionConfig cfg;
        cfg.lambda = rng.uniform(0.0, 6.0);
        cfg.nms_iou = rng.uniform(0.02, 0.4);
        const auto got = select_smooth_regions(anchors, sal, cfg);
        const auto want = brute_force_select(anchors, sal, cfg);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) CHECK(same_region(got[i], want[i]));
    }
}

TEST_CASE("empty anchor list selects nothing") {
    SaliencyMap sal(20, 20, 0.1);
    CHECK(select_smooth_regions({}, sal, SmoothRegionConfig::defaults()).empty());
}

TEST_CASE("rasterize: empty list -> zero map; full frame -> ones; random matches point-in-box oracle") {
    CHECK(rasterize({}, 20, 30).values == std::vector<double>(600, 0.0));
    const auto ones = rasterize({{0.0, 0.0, 1.0, 1.0, 0, 0.0}}, 20, 30);
    CHECK(ones.values == std::vector<double>(600, 1.0));

    Rng rng(43);
    const auto regions = random_anchors(6, rng);
    const auto map = rasterize(regions, 33, 47);
    for (int y = 0; y < 47; ++y) {
        for (int x = 0; x < 33; ++x) {
            const double cx = (x + 0.5) / 33.0, cy = (y + 0.5) / 47.0;
            bool inside = false;
            for (const auto& r : regions) {
                if (cx >= r.x0 && cx < r.x1 && cy >= r.y0 && cy < r.y1) inside = true;
            }
            CHECK(map.at(x, y) == (inside ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("property: lambda raises scores by lambda/|A|, favoring large regions") {
    Rng rng(44);
    const auto sal = random_saliency(60, 80, rng);
    const AnchorRegion small{0.0, 0.0, 0.2, 0.2, 0, 0.0};
    const AnchorRegion large{0.3, 0.3, 0.9, 0.9, 0, 0.0};
    const double lambda = 4.0;
    const auto px_s = region_pixel_rect(small, 60, 80);
    const auto px_l = region_pixel_rect(large, 60, 80);
    const int ns = (px_s.x1 - px_s.x0) * (px_s.y1 - px_s.y0);
    const int nl = (px_l.x1 - px_l.x0) * (px_l.y1 - px_l.y0);
    CHECK(score_region(small, sal, lambda) - score_region(small, sal, 0.0) ==
          doctest::Approx(lambda / ns).epsilon(1e-9));
    CHECK(score_region(large, sal, lambda) - score_region(large, sal, 0.0) ==
          doctest::Approx(lambda / nl).epsilon(1e-9));
    // Equal average saliency: the larger region scores lower under lambda > 0.
    SaliencyMap flat(60, 80, 0.4);
    CHECK(score_region(large, flat, lambda) < score_region(small, flat, lambda));
}

TEST_CASE("property: scaling saliency by powers of two leaves the selected set unchanged (lambda 0)") {
    Rng rng(45);
    const auto anchors = random_anchors(30, rng);
    auto sal = random_saliency(30, 40, rng);
    SmoothRegionConfig cfg;
    cfg.lambda = 0.0;
    const auto base = select_smooth_regions(anchors, sal, cfg);
    for (double c : {0.5, 2.0, 8.0}) {
        SaliencyMap scaled = sal;
        for (auto& v : scaled.values) v *= c;
        const auto got = select_smooth_regions(anchors, scaled, cfg);
        REQUIRE(got.size() == base.size());
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].x0 == base[i].x0);
            CHECK(got[i].y0 == base[i].y0);
        }
    }
}

}  // TEST_SUITE
