#include "doctest.h"

#include <cstring>
#include <fstream>

#include "t2p/dataset_synth.hpp"
#include "test_util.hpp"

using namespace t2p;

namespace {

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.canvas_w = 120;
    cfg.canvas_h = 160;
    cfg.map_w = 30;
    cfg.map_h = 40;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("dataset_synth") {

TEST_CASE("fixed seed gives bit-identical samples across calls") {
    const auto cfg = small_config();
    const auto a = generate_sample(42, cfg);
    const auto b = generate_sample(42, cfg);
    CHECK(a.background.values == b.background.values);
    CHECK(a.smooth_map.values == b.smooth_map.values);
    CHECK(a.layout_map.values == b.layout_map.values);
    REQUIRE(a.boxes.boxes.size() == b.boxes.boxes.size());
    for (size_t i = 0; i < a.boxes.boxes.size(); ++i) {
        CHECK(a.boxes.boxes[i].x == b.boxes.boxes[i].x);
        CHECK(a.boxes.boxes[i].y == b.boxes.boxes[i].y);
        CHECK(a.texts[i].text == b.texts[i].text);
    }
}

TEST_CASE("constructive invariants: layout map equals rasterized boxes; boxes sit in smooth regions") {
    const auto cfg = small_config();
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        const auto s = generate_sample(seed, cfg);
        REQUIRE(!s.boxes.boxes.empty());
        CHECK(s.texts.size() == s.boxes.boxes.size());

        std::vector<AnchorRegion> regions;
        for (const auto& b : s.boxes.boxes) {
            regions.push_back({b.x, b.y, b.x + b.width, b.y + b.height, 0, 0.0});
        }
        const auto raster = rasterize(regions, cfg.map_w, cfg.map_h);
        CHECK(raster.values == s.layout_map.values);

        for (const auto& b : s.boxes.boxes) {
            const AnchorRegion r{b.x, b.y, b.x + b.width, b.y + b.height, 0, 0.0};
            const auto px = region_pixel_rect(r, cfg.map_w, cfg.map_h);
            int inside = 0, total = 0;
            for (int y = px.y0; y < px.y1; ++y) {
                for (int x = px.x0; x < px.x1; ++x) {
                    inside += s.smooth_map.at(x, y) > 0.5 ? 1 : 0;
                    ++total;
                }
            }
            REQUIRE(total > 0);
            CHECK(static_cast<double>(inside) / total >= cfg.min_smooth_overlap);
        }
    }
}

TEST_CASE("placed boxes avoid the salient blobs, on average") {
    const auto cfg = small_config();
    double box_sal = 0.0, blob_sal = 0.0;
    int n_box = 0, n_blob = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto s = generate_sample(seed * 131 + 7, cfg);
        const auto sal = resize_map(spectral_residual(s.background, cfg.saliency), cfg.map_w, cfg.map_h);
        for (const auto& b : s.boxes.boxes) {
            const AnchorRegion r{b.x, b.y, b.x + b.width, b.y + b.height, 0, 0.0};
            const auto px = region_pixel_rect(r, cfg.map_w, cfg.map_h);
            for (int y = px.y0; y < px.y1; ++y) {
                for (int x = px.x0; x < px.x1; ++x) {
                    box_sal += sal.at(x, y);
                    ++n_box;
                }
            }
        }
        for (const auto& [cx, cy] : s.salient_centers) {
            blob_sal += sal.at(std::min(cfg.map_w - 1, static_cast<int>(cx * cfg.map_w)),
                               std::min(cfg.map_h - 1, static_cast<int>(cy * cfg.map_h)));
            ++n_blob;
        }
    }
    REQUIRE(n_box > 0);
    REQUIRE(n_blob > 0);
    CHECK(box_sal / n_box < blob_sal / n_blob);
}

TEST_CASE("build_dataset: 9:1 split, manifest matches files, identical re-runs") {
    test::TempDir tmp("dataset");
    const auto cfg = small_config();
    const auto manifest = build_dataset(10, 99, tmp.path() / "d", cfg);
    CHECK(manifest.train_ids.size() == 9);
    CHECK(manifest.val_ids.size() == 1);
    REQUIRE(manifest.count == 10);
    for (int i = 0; i < manifest.count; ++i) {
        CHECK(std::filesystem::exists(manifest.background_path(i)));
        CHECK(std::filesystem::exists(manifest.smooth_map_path(i)));
        CHECK(std::filesystem::exists(manifest.layout_map_path(i)));
        CHECK(std::filesystem::exists(manifest.record_path(i)));
    }
    const auto before = slurp(manifest.background_path(3));
    const auto rec_before = slurp(manifest.record_path(3));
    build_dataset(10, 99, tmp.path() / "d", cfg);
    CHECK(slurp(manifest.background_path(3)) == before);
    CHECK(slurp(manifest.record_path(3)) == rec_before);

    const auto loaded = load_dataset_manifest(tmp.path() / "d" / "manifest.json");
    CHECK(loaded.count == 10);
    CHECK(loaded.map_w == cfg.map_w);

    const auto set = load_training_set(loaded);
    REQUIRE(set.samples.size() == 10);
    for (const auto& s : set.samples) {
        CHECK(s.smooth.width == cfg.map_w);
        CHECK(!s.boxes.boxes.empty());
        CHECK(s.attrs.size() == s.boxes.boxes.size());
        std::vector<AnchorRegion> regions;
        for (const auto& b : s.boxes.boxes) {
            regions.push_back({b.x, b.y, b.x + b.width, b.y + b.height, 0, 0.0});
        }
        const auto raster = rasterize(regions, cfg.map_w, cfg.map_h);
        CHECK(raster.values == s.layout.values);
    }

    CHECK_THROWS_AS(build_dataset(5, 1, tmp.path() / "d2", cfg), InvalidInputError);
}

TEST_CASE("synth_texts is deterministic and starts with a title") {
    const auto a = synth_texts(5);
    const auto b = synth_texts(5);
    REQUIRE(!a.empty());
    CHECK(a.size() == b.size());
    CHECK(a[0].attribute == TextAttribute::Title);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].text == b[i].text);
}

}  // TEST_SUITE
