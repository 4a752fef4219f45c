#include "t2p/compose.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <opencv2/imgproc.hpp>

#include "json.hpp"

#include "cv_bridge.hpp"

namespace t2p {

namespace {

AnchorRegion as_region(const TextBox& b) {
    return {b.x, b.y, b.x + b.width, b.y + b.height, 0, 0.0};
}

bool position_clear(const TextBox& cand, const std::vector<TextBox>& fixed, double max_iou) {
    for (const auto& other : fixed) {
        if (box_iou(as_region(cand), as_region(other)) > max_iou) return false;
    }
    return true;
}

// Prefixes errors with the failing stage while keeping their type (the CLI
// maps types to exit codes).
template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
    auto prefixed = [&](const char* what) { return std::string("stage ") + stage + ": " + what; };
    try {
        return fn();
    } catch (const InvalidInputError& e) {
        throw InvalidInputError(prefixed(e.what()));
    } catch (const ConfigError& e) {
        throw ConfigError(prefixed(e.what()));
    } catch (const StateError& e) {
        throw StateError(prefixed(e.what()));
    } catch (const LoadError& e) {
        throw LoadError(prefixed(e.what()));
    } catch (const MissingResourceError& e) {
        throw MissingResourceError(prefixed(e.what()));
    } catch (const Error& e) {
        throw Error(prefixed(e.what()));
    }
}

}  // namespace

Layout separate_boxes(const Layout& layout, double max_iou, std::vector<double>* displacements) {
    Layout out;
    if (displacements) displacements->assign(layout.boxes.size(), 0.0);
    for (size_t i = 0; i < layout.boxes.size(); ++i) {
        TextBox box = layout.boxes[i];
        if (position_clear(box, out.boxes, max_iou)) {
            out.boxes.push_back(box);
            continue;
        }
        // Scan candidate positions on a fine grid: same column first (pure
        // vertical push), then the full grid; keep the admissible position
        // closest to the original.
        const int grid = 96;
        TextBox best = box;
        double best_d = -1.0;
        auto consider = [&](double x, double y) {
            TextBox cand = box;
            cand.x = std::clamp(x, 0.0, std::max(0.0, 1.0 - cand.width));
            cand.y = std::clamp(y, 0.0, std::max(0.0, 1.0 - cand.height));
            if (!position_clear(cand, out.boxes, max_iou)) return;
            const double d = std::hypot(cand.x - box.x, cand.y - box.y);
            if (best_d < 0.0 || d < best_d - 1e-12) {
                best_d = d;
                best = cand;
            }
        };
        for (int gy = 0; gy <= grid; ++gy) {
            consider(box.x, static_cast<double>(gy) / grid);
        }
        if (best_d < 0.0) {
            for (int gy = 0; gy <= grid; ++gy) {
                for (int gx = 0; gx <= grid; ++gx) {
                    consider(static_cast<double>(gx) / grid, static_cast<double>(gy) / grid);
                }
            }
        }
        if (best_d < 0.0) best_d = 0.0;  // canvas too crowded; keep as-is
        if (displacements) (*displacements)[i] = best_d;
        out.boxes.push_back(best);
    }
    return out;
}

GenerateResult generate(const std::vector<TextElement>& texts, const EmbeddingIndex& index,
                        const TextEmbedder& text_embedder, const G1Model& g1, const G2Model& g2,
                        const StyleLibrary& styles, const FontRegistry& fonts,
                        const PipelineConfig& cfg) {
    if (texts.empty()) throw InvalidInputError("generate: empty text list");
    for (const auto& t : texts) {
        if (t.text.empty()) throw InvalidInputError("generate: empty text string");
    }

    GenerateResult res;
    res.spec.canvas_w = cfg.canvas_w;
    res.spec.canvas_h = cfg.canvas_h;
    res.spec.texts = texts;
    res.spec.seed = cfg.seed;
    res.spec.refine_iters = cfg.refine_iters;

    run_stage("retrieval", [&] {
        std::vector<std::string> parts;
        for (const auto& t : texts) parts.push_back(t.text);
        const auto query = text_embedder.embed(join_texts(parts));
        const auto top = index.top_k(query, 1);
        res.spec.background_id = top[0].image_id;
        res.spec.background_path = index.path_for(top[0].image_id);
        return 0;
    });

    run_stage("background", [&] {
        res.background = resize(load_image(res.spec.background_path), cfg.canvas_w, cfg.canvas_h);
        return 0;
    });

    run_stage("saliency", [&] {
        const SaliencyMap full = spectral_residual(res.background, cfg.saliency);
        res.saliency_map = resize_map(full, cfg.map_w, cfg.map_h);
        return 0;
    });

    run_stage("smooth_region", [&] {
        const auto anchors = generate_anchors(cfg.map_w, cfg.map_h, cfg.regions);
        const auto kept = select_smooth_regions(anchors, res.saliency_map, cfg.regions);
        res.smooth_map = rasterize(kept, cfg.map_w, cfg.map_h);
        return 0;
    });

    run_stage("layout_distribution", [&] {
        res.layout_dist = g1.predict(res.smooth_map);
        return 0;
    });

    Layout refined;
    run_stage("layout_refine", [&] {
        const Layout p0 = sample_initial_layout(res.layout_dist, texts, cfg.seed);
        std::vector<TextAttribute> attrs;
        for (const auto& t : texts) attrs.push_back(t.attribute);
        refined = g2.refine(res.smooth_map, res.layout_dist, p0, attrs, cfg.refine_iters);
        return 0;
    });

    run_stage("separation", [&] {
        res.spec.layout = separate_boxes(refined, cfg.separation_iou, &res.spec.separation_shift);
        return 0;
    });

    run_stage("stylize", [&] {
        for (size_t i = 0; i < texts.size(); ++i) {
            const auto r = text_embedder.embed(texts[i].text);
            const Rgb bg = sample_background_color(res.background, res.spec.layout.boxes[i]);
            const auto choice = match_style(styles, r, bg, cfg.style_weight);
            res.spec.styles.push_back({choice.text_color, choice.font, choice.contrast_flipped});
        }
        return 0;
    });

    run_stage("render", [&] {
        res.poster = render(res.spec, res.background, fonts);
        return 0;
    });
    return res;
}

RasterImage render(const PosterSpec& spec, const RasterImage& background, const FontRegistry& fonts) {
    RasterImage bg = background;
    if (bg.width != spec.canvas_w || bg.height != spec.canvas_h) {
        bg = resize(bg, spec.canvas_w, spec.canvas_h);
    }
    if (bg.channels == 1) {
        RasterImage rgb(bg.width, bg.height, 3);
        for (int y = 0; y < bg.height; ++y) {
            for (int x = 0; x < bg.width; ++x) {
                for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = bg.at(x, y);
            }
        }
        bg = std::move(rgb);
    }
    if (spec.layout.boxes.size() != spec.texts.size() || spec.styles.size() != spec.texts.size()) {
        throw ConfigError("render: texts/layout/styles must align");
    }
    cv::Mat canvas = detail::image_to_mat8(bg);

    for (size_t i = 0; i < spec.texts.size(); ++i) {
        const std::string& text = spec.texts[i].text;
        if (text.empty()) continue;
        const TextBox& box = spec.layout.boxes[i];
        const auto& style = spec.styles[i];
        const FontSpec& font = fonts.get(style.font);
        const int face = font.face | (font.italic ? cv::FONT_ITALIC : 0);

        const int bx = static_cast<int>(std::lround(box.x * spec.canvas_w));
        const int by = static_cast<int>(std::lround(box.y * spec.canvas_h));
        const int bw = std::max(4, static_cast<int>(std::lround(box.width * spec.canvas_w)));
        const int bh = std::max(4, static_cast<int>(std::lround(box.height * spec.canvas_h)));

        int baseline = 0;
        const cv::Size unit = cv::getTextSize(text, face, 1.0, 1, &baseline);
        if (unit.width <= 0 || unit.height <= 0) continue;
        double scale = 0.72 * bh / static_cast<double>(unit.height + baseline);
        // Fit width, then re-measure once with the final thickness.
        for (int pass = 0; pass < 4; ++pass) {
            const int thickness = std::max(1, static_cast<int>(std::lround(scale * font.thickness_scale)));
            int bl = 0;
            const cv::Size sz = cv::getTextSize(text, face, scale, thickness, &bl);
            if (sz.width <= bw - 2 && sz.height + bl <= bh) break;
            const double wr = static_cast<double>(bw - 2) / std::max(1, sz.width);
            const double hr = static_cast<double>(bh) / std::max(1, sz.height + bl);
            scale *= std::min({wr, hr, 0.95});
            if (scale < 0.05) {
                scale = 0.05;
                break;
            }
        }
        const int thickness = std::max(1, static_cast<int>(std::lround(scale * font.thickness_scale)));
        int bl = 0;
        const cv::Size sz = cv::getTextSize(text, face, scale, thickness, &bl);
        int org_y = by + (bh - sz.height - bl) / 2 + sz.height;
        org_y = std::min(org_y, by + bh - bl);
        org_y = std::max(org_y, by + sz.height);
        const cv::Scalar color(style.text_color[2] * 255.0, style.text_color[1] * 255.0,
                               style.text_color[0] * 255.0);
        cv::putText(canvas, text, cv::Point(bx + 1, org_y), face, scale, color, thickness, cv::LINE_AA);
    }
    return detail::image_from_mat8(canvas);
}

std::string PosterSpec::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["seed"] = seed;
    j["canvas"] = {{"width", canvas_w}, {"height", canvas_h}};
    j["background"] = {{"id", background_id}, {"path", background_path}};
    j["refine_iters"] = refine_iters;
    auto& jt = j["texts"] = nlohmann::ordered_json::array();
    for (const auto& t : texts) {
        jt.push_back({{"text", t.text}, {"attribute", attribute_name(t.attribute)}});
    }
    auto& jl = j["layout"] = nlohmann::ordered_json::array();
    for (const auto& b : layout.boxes) {
        jl.push_back({{"x", b.x}, {"y", b.y}, {"width", b.width}, {"height", b.height}});
    }
    auto& js = j["styles"] = nlohmann::ordered_json::array();
    for (const auto& s : styles) {
        js.push_back({{"text_color", rgb_to_hex(s.text_color)},
                      {"font", s.font},
                      {"contrast_flipped", s.contrast_flipped}});
    }
    j["separation_shift"] = separation_shift;
    return j.dump(2) + "\n";
}

PosterSpec PosterSpec::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw LoadError("poster spec: invalid JSON");
    PosterSpec spec;
    try {
        spec.seed = j.at("seed").get<std::uint64_t>();
        spec.canvas_w = j.at("canvas").at("width").get<int>();
        spec.canvas_h = j.at("canvas").at("height").get<int>();
        spec.background_id = j.at("background").at("id").get<std::string>();
        spec.background_path = j.at("background").at("path").get<std::string>();
        spec.refine_iters = j.at("refine_iters").get<int>();
        for (const auto& t : j.at("texts")) {
            spec.texts.push_back(
                {t.at("text").get<std::string>(), attribute_from_name(t.at("attribute").get<std::string>())});
        }
        for (const auto& b : j.at("layout")) {
            spec.layout.boxes.push_back({b.at("x").get<double>(), b.at("y").get<double>(),
                                         b.at("width").get<double>(), b.at("height").get<double>()});
        }
        for (const auto& s : j.at("styles")) {
            spec.styles.push_back({rgb_from_hex(s.at("text_color").get<std::string>()),
                                   s.at("font").get<std::string>(), s.value("contrast_flipped", false)});
        }
        spec.separation_shift = j.value("separation_shift", std::vector<double>{});
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("poster spec: ") + e.what());
    }
    return spec;
}

std::vector<TextElement> load_texts_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingResourceError("texts: cannot open " + path.string());
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded()) throw LoadError("texts: invalid JSON in " + path.string());
    const nlohmann::json* arr = &j;
    if (j.is_object() && j.contains("texts")) arr = &j.at("texts");
    if (!arr->is_array() || arr->empty()) throw InvalidInputError("texts: expected a non-empty array");
    std::vector<TextElement> out;
    for (const auto& e : *arr) {
        TextElement t;
        t.text = e.at("text").get<std::string>();
        t.attribute = attribute_from_name(e.value("attribute", "body"));
        if (t.text.empty()) throw InvalidInputError("texts: empty text string");
        out.push_back(std::move(t));
    }
    return out;
}

void save_texts_json(const std::filesystem::path& path, const std::vector<TextElement>& texts) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& t : texts) {
        arr.push_back({{"text", t.text}, {"attribute", attribute_name(t.attribute)}});
    }
    std::ofstream os(path);
    if (!os) throw Error("texts: cannot write " + path.string());
    os << arr.dump(2) << "\n";
}

}  // namespace t2p
