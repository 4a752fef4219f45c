#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "t2p/dataset_synth.hpp"
#include "t2p/eval.hpp"
#include "t2p/retrieval.hpp"
#include "t2p/stylizer.hpp"

namespace t2p {

struct StyleAssignment {
    Rgb text_color{};
    std::string font;
    bool contrast_flipped = false;
};

// The structured output of a generation run; serializes to deterministic
// JSON.
struct PosterSpec {
    int canvas_w = 300, canvas_h = 400;
    std::string background_id;
    std::string background_path;
    std::vector<TextElement> texts;
    Layout layout;
    std::vector<StyleAssignment> styles;
    std::vector<double> separation_shift;  // displacement applied per box
    std::uint64_t seed = 0;
    int refine_iters = 0;

    std::string to_json() const;
    static PosterSpec from_json_text(const std::string& text);
};

struct PipelineConfig {
    int canvas_w = 300, canvas_h = 400;
    int map_w = 60, map_h = 80;
    SaliencyConfig saliency{};
    SmoothRegionConfig regions = SmoothRegionConfig::defaults();
    int refine_iters = 5;
    std::uint64_t seed = 7;
    double separation_iou = 0.05;
    double style_weight = 0.7;
};

struct GenerateResult {
    PosterSpec spec;
    RasterImage poster;
    RasterImage background;     // at canvas resolution
    SaliencyMap saliency_map;   // at map resolution
    SmoothRegionMap smooth_map;
    LayoutDistribution layout_dist;
};

// retrieval -> saliency -> smooth regions -> g1 -> sample -> g2(K) ->
// separation -> stylize -> render. Stage failures carry the stage name.
GenerateResult generate(const std::vector<TextElement>& texts, const EmbeddingIndex& index,
                        const TextEmbedder& text_embedder, const G1Model& g1, const G2Model& g2,
                        const StyleLibrary& styles, const FontRegistry& fonts,
                        const PipelineConfig& cfg);

// Draws the stylized texts onto the background (empty strings are skipped).
RasterImage render(const PosterSpec& spec, const RasterImage& background, const FontRegistry& fonts);

// Greedy overlap resolution: boxes keep input order priority; later boxes are
// moved to the admissible position of minimal displacement. Displacements are
// reported per box.
Layout separate_boxes(const Layout& layout, double max_iou, std::vector<double>* displacements);

// texts.json: [{"text": ..., "attribute": "title|subtitle|body"}, ...]
std::vector<TextElement> load_texts_json(const std::filesystem::path& path);
void save_texts_json(const std::filesystem::path& path, const std::vector<TextElement>& texts);

}  // namespace t2p
