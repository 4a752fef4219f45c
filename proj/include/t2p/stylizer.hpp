#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "t2p/layout_model.hpp"
#include "t2p/retrieval.hpp"

namespace t2p {

using Rgb = std::array<double, 3>;

// One observed text styling: (text embedding, background color under the
// text, the text color, font id).
struct StyleTuple {
    EmbeddingVector embedding;
    Rgb background_color{};
    Rgb text_color{};
    std::string font;
};

struct StyleLibrary {
    std::vector<StyleTuple> centers;  // embedding L2-normalized per center
    size_t cluster_count() const { return centers.size(); }

    void save(const std::filesystem::path& path) const;
    static StyleLibrary load(const std::filesystem::path& path);
};

struct KmeansResult {
    std::vector<int> assignments;
    std::vector<std::vector<double>> centers;
    double inertia = 0.0;
    int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding; stops on max_iters or relative
// inertia change < 1e-6. Inertia is non-increasing per iteration.
KmeansResult kmeans(const std::vector<std::vector<double>>& points, int m, std::uint64_t seed,
                    int max_iters = 100);

// Clusters on embeddings; per cluster keeps the normalized mean embedding,
// the medoid background/text colors, and the modal font.
StyleLibrary build_library(const std::vector<StyleTuple>& tuples, int m, std::uint64_t seed);

struct StyleChoice {
    Rgb text_color{};
    std::string font;
    bool contrast_flipped = false;
};

// Scores centers by w*cos(r, r_m) + (1-w)*(1 - |cI - cI_m|/sqrt(3)); the
// winner's (text color, font) is returned, with the text color flipped toward
// black or white when its contrast against the actual background is < 1.5.
StyleChoice match_style(const StyleLibrary& library, std::span<const float> r, const Rgb& background,
                        double w = 0.7);

// Mean color over the box footprint.
Rgb sample_background_color(const RasterImage& image, const TextBox& box);

// WCAG-style relative luminance and contrast ratio.
double relative_luminance(const Rgb& c);
double contrast_ratio(const Rgb& a, const Rgb& b);

std::string rgb_to_hex(const Rgb& c);
Rgb rgb_from_hex(const std::string& hex);

// Text rendering styles over the built-in Hershey vector faces.
struct FontSpec {
    int face = 0;  // cv::HersheyFonts value
    double thickness_scale = 1.0;
    bool italic = false;
};

class FontRegistry {
public:
    static FontRegistry builtin();
    static FontRegistry from_json(const std::filesystem::path& path);

    bool has(const std::string& id) const { return fonts_.count(id) > 0; }
    const FontSpec& get(const std::string& id) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, FontSpec> fonts_;
};

// Deterministic corpus with planted styles: `styles` base styles, each
// repeated with small embedding jitter. jitter = 0 plants exact clusters.
std::vector<StyleTuple> synth_style_corpus(int n, int styles, std::uint64_t seed,
                                           const TextEmbedder& embedder, const FontRegistry& fonts,
                                           double jitter = 0.05);

// Tuples file: list of {text | embedding, background_color, text_color, font}.
std::vector<StyleTuple> load_style_tuples(const std::filesystem::path& path,
                                          const TextEmbedder& embedder);
void save_style_tuples(const std::filesystem::path& path, const std::vector<StyleTuple>& tuples);

}  // namespace t2p
