#include "doctest.h"

#include <cstdlib>
#include <fstream>

#include "t2p/compose.hpp"
#include "test_util.hpp"

using namespace t2p;

namespace {

struct TinyPipeline {
    test::TempDir tmp{"compose"};
    EmbeddingIndex index;
    G1Model g1{G1Config{30, 40, 4, 5, 8, 2}, 21};
    G2Model g2{G2Config{30, 40, 4, 3, 8, 8, 2}, 22};
    StyleLibrary styles;
    FontRegistry fonts = FontRegistry::builtin();
    PipelineConfig cfg;

    TinyPipeline() {
        SynthConfig synth;
        synth.canvas_w = 120;
        synth.canvas_h = 160;
        synth.map_w = 30;
        synth.map_h = 40;
        ThumbnailProjectionImageEmbedder image_embedder(64);
        for (int i = 0; i < 3; ++i) {
            const auto sample = generate_sample(500 + static_cast<std::uint64_t>(i), synth);
            const auto path = tmp.path() / ("bg" + std::to_string(i) + ".png");
            save_png(path, sample.background);
            index.add("bg" + std::to_string(i), path.string(), image_embedder.embed(sample.background));
        }
        HashedNgramTextEmbedder text_embedder(64);
        styles = build_library(synth_style_corpus(30, 3, 4, text_embedder, fonts, 0.02), 3, 5);
        cfg.canvas_w = 120;
        cfg.canvas_h = 160;
        cfg.map_w = 30;
        cfg.map_h = 40;
        cfg.refine_iters = 2;
        cfg.seed = 77;
    }
};

const std::vector<TextElement> kTexts{{"summer jazz festival", TextAttribute::Title},
                                      {"golden hour sessions", TextAttribute::Subtitle},
                                      {"tickets at the door", TextAttribute::Body}};

}  // namespace

TEST_SUITE("compose") {

TEST_CASE("separate_boxes: overlaps resolved below the IoU bound, first box never moves") {
    Layout crowded;
    crowded.boxes.push_back({0.1, 0.1, 0.5, 0.1});
    crowded.boxes.push_back({0.12, 0.12, 0.5, 0.1});
    crowded.boxes.push_back({0.11, 0.14, 0.5, 0.1});
    std::vector<double> shifts;
    const auto out = separate_boxes(crowded, 0.05, &shifts);
    REQUIRE(out.boxes.size() == 3);
    CHECK(shifts[0] == 0.0);
    CHECK(out.boxes[0].x == crowded.boxes[0].x);
    for (size_t i = 0; i < out.boxes.size(); ++i) {
        for (size_t j = i + 1; j < out.boxes.size(); ++j) {
            const AnchorRegion a{out.boxes[i].x, out.boxes[i].y, out.boxes[i].x + out.boxes[i].width,
                                 out.boxes[i].y + out.boxes[i].height, 0, 0.0};
            const AnchorRegion b{out.boxes[j].x, out.boxes[j].y, out.boxes[j].x + out.boxes[j].width,
                                 out.boxes[j].y + out.boxes[j].height, 0, 0.0};
            CHECK(box_iou(a, b) <= 0.05);
        }
        CHECK(out.boxes[i].x + out.boxes[i].width <= 1.0 + 1e-9);
        CHECK(out.boxes[i].y + out.boxes[i].height <= 1.0 + 1e-9);
    }
    CHECK(shifts[1] > 0.0);
}

TEST_CASE("render: glyphs stay inside the declared box (2px overhang tolerance)") {
    PosterSpec spec;
    spec.canvas_w = 300;
    spec.canvas_h = 400;
    spec.texts = {{"HELLO WORLD", TextAttribute::Title}};
    spec.layout.boxes.push_back({0.1, 0.2, 0.6, 0.08});
    spec.styles.push_back({{1.0, 1.0, 1.0}, "sans", false});
    const RasterImage black(300, 400, 3, 0.0);
    const auto fonts = FontRegistry::builtin();
    const auto poster = render(spec, black, fonts);
    int min_x = 1000, max_x = -1, min_y = 1000, max_y = -1, lit = 0;
    for (int y = 0; y < 400; ++y) {
        for (int x = 0; x < 300; ++x) {
            if (poster.at(x, y, 0) > 0.2) {
                min_x = std::min(min_x, x);
                max_x = std::max(max_x, x);
                min_y = std::min(min_y, y);
                max_y = std::max(max_y, y);
                ++lit;
            }
        }
    }
    REQUIRE(lit > 50);
    CHECK(min_x >= static_cast<int>(0.1 * 300) - 2);
    CHECK(max_x <= static_cast<int>((0.1 + 0.6) * 300) + 2);
    CHECK(min_y >= static_cast<int>(0.2 * 400) - 2);
    CHECK(max_y <= static_cast<int>((0.2 + 0.08) * 400) + 2);

    // Deterministic: identical re-render.
    const auto again = render(spec, black, fonts);
    CHECK(again.values == poster.values);

    // Empty strings are filtered; unknown font names the id.
    PosterSpec empty_text = spec;
    empty_text.texts[0].text = "";
    const auto untouched = render(empty_text, black, fonts);
    CHECK(untouched.values == black.values);
    PosterSpec bad_font = spec;
    bad_font.styles[0].font = "wingdings";
    CHECK_THROWS_WITH_AS(render(bad_font, black, fonts), doctest::Contains("wingdings"),
                         MissingResourceError);
}

TEST_CASE("generate: deterministic spec and poster, boxes in-canvas, stages replayable") {
    TinyPipeline pipe;
    HashedNgramTextEmbedder embedder(64);
    const auto r1 = generate(kTexts, pipe.index, embedder, pipe.g1, pipe.g2, pipe.styles, pipe.fonts, pipe.cfg);
    const auto r2 = generate(kTexts, pipe.index, embedder, pipe.g1, pipe.g2, pipe.styles, pipe.fonts, pipe.cfg);
    CHECK(r1.spec.to_json() == r2.spec.to_json());
    CHECK(r1.poster.values == r2.poster.values);
    REQUIRE(r1.spec.layout.boxes.size() == kTexts.size());
    for (const auto& b : r1.spec.layout.boxes) {
        CHECK(b.x >= 0.0);
        CHECK(b.y >= 0.0);
        CHECK(b.x + b.width <= 1.0 + 1e-9);
        CHECK(b.y + b.height <= 1.0 + 1e-9);
    }
    for (size_t i = 0; i < r1.spec.layout.boxes.size(); ++i) {
        for (size_t j = i + 1; j < r1.spec.layout.boxes.size(); ++j) {
            const auto& bi = r1.spec.layout.boxes[i];
            const auto& bj = r1.spec.layout.boxes[j];
            const AnchorRegion a{bi.x, bi.y, bi.x + bi.width, bi.y + bi.height, 0, 0.0};
            const AnchorRegion b{bj.x, bj.y, bj.x + bj.width, bj.y + bj.height, 0, 0.0};
            CHECK(box_iou(a, b) <= pipe.cfg.separation_iou + 1e-12);
        }
    }

    // Stage-by-stage replay reproduces the pipeline's layout.
    std::vector<std::string> parts;
    for (const auto& t : kTexts) parts.push_back(t.text);
    const auto top = pipe.index.top_k(embedder.embed(join_texts(parts)), 1);
    CHECK(top[0].image_id == r1.spec.background_id);
    const auto bg = resize(load_image(pipe.index.path_for(top[0].image_id)), 120, 160);
    const auto sal = resize_map(spectral_residual(bg, pipe.cfg.saliency), 30, 40);
    const auto smooth = rasterize(
        select_smooth_regions(generate_anchors(30, 40, pipe.cfg.regions), sal, pipe.cfg.regions), 30, 40);
    CHECK(smooth.values == r1.smooth_map.values);
    const auto dist = pipe.g1.predict(smooth);
    const Layout p0 = sample_initial_layout(dist, kTexts, pipe.cfg.seed);
    std::vector<TextAttribute> attrs;
    for (const auto& t : kTexts) attrs.push_back(t.attribute);
    const Layout refined = pipe.g2.refine(smooth, dist, p0, attrs, pipe.cfg.refine_iters);
    const Layout separated = separate_boxes(refined, pipe.cfg.separation_iou, nullptr);
    for (size_t i = 0; i < separated.boxes.size(); ++i) {
        CHECK(separated.boxes[i].x == r1.spec.layout.boxes[i].x);
        CHECK(separated.boxes[i].y == r1.spec.layout.boxes[i].y);
    }
}

TEST_CASE("generate: empty texts are invalid input") {
    TinyPipeline pipe;
    HashedNgramTextEmbedder embedder(64);
    CHECK_THROWS_AS(generate({}, pipe.index, embedder, pipe.g1, pipe.g2, pipe.styles, pipe.fonts, pipe.cfg),
                    InvalidInputError);
}

TEST_CASE("poster spec json round-trips") {
    PosterSpec spec;
    spec.canvas_w = 300;
    spec.canvas_h = 400;
    spec.background_id = "img7";
    spec.background_path = "imgs/7.png";
    spec.seed = 1234;
    spec.refine_iters = 5;
    spec.texts = kTexts;
    spec.layout.boxes = {{0.1, 0.2, 0.3, 0.08}, {0.15, 0.4, 0.25, 0.05}, {0.2, 0.6, 0.2, 0.035}};
    spec.styles = {{{1, 1, 1}, "sans", false}, {{0, 0, 0}, "serif", true}, {{1, 0, 0}, "plain", false}};
    spec.separation_shift = {0.0, 0.01, 0.0};
    const auto text = spec.to_json();
    const auto back = PosterSpec::from_json_text(text);
    CHECK(back.background_id == spec.background_id);
    CHECK(back.seed == spec.seed);
    CHECK(back.texts.size() == 3);
    CHECK(back.texts[1].attribute == TextAttribute::Subtitle);
    CHECK(back.layout.boxes[2].y == spec.layout.boxes[2].y);
    CHECK(back.styles[1].contrast_flipped);
    CHECK(back.to_json() == text);
}

TEST_CASE("texts json loader validates structure") {
    test::TempDir tmp("texts");
    {
        std::ofstream os(tmp.path() / "texts.json");
        os << R"([{"text": "big title", "attribute": "Title"}, {"text": "small print"}])";
    }
    const auto texts = load_texts_json(tmp.path() / "texts.json");
    REQUIRE(texts.size() == 2);
    CHECK(texts[0].attribute == TextAttribute::Title);
    CHECK(texts[1].attribute == TextAttribute::Body);
    {
        std::ofstream os(tmp.path() / "empty.json");
        os << "[]";
    }
    CHECK_THROWS_AS(load_texts_json(tmp.path() / "empty.json"), InvalidInputError);
    CHECK_THROWS_AS(load_texts_json(tmp.path() / "nope.json"), MissingResourceError);
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("exit codes: ok / invalid input / missing resource") {
    const char* bin = std::getenv("TEXT2POSTER_BIN");
    if (!bin) return;  // suite runs only under ctest, which sets the path
    test::TempDir tmp("cli");
    const std::string quiet = " > /dev/null 2>&1";

    RasterImage img(64, 64, 3, 0.5);
    for (int y = 20; y < 40; ++y) {
        for (int x = 20; x < 40; ++x) img.at(x, y, 0) = 1.0;
    }
    save_png(tmp.path() / "in.png", img);

    const std::string sal_cmd = std::string(bin) + " saliency " + (tmp.path() / "in.png").string() +
                                " -o " + (tmp.path() / "out.png").string() + quiet;
    CHECK(WEXITSTATUS(std::system(sal_cmd.c_str())) == 0);
    CHECK(std::filesystem::exists(tmp.path() / "out.png"));

    const std::string missing_cmd =
        std::string(bin) + " saliency " + (tmp.path() / "absent.png").string() + quiet;
    CHECK(WEXITSTATUS(std::system(missing_cmd.c_str())) == 3);

    {
        std::ofstream os(tmp.path() / "bad.json");
        os << "[]";
    }
    const std::string bad_cmd = std::string(bin) + " retrieve --text x --index " +
                                (tmp.path() / "bad.json").string() + quiet;
    CHECK(WEXITSTATUS(std::system(bad_cmd.c_str())) == 2);
}

}  // TEST_SUITE
