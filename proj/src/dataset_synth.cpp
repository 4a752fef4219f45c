#include "t2p/dataset_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "t2p/rng.hpp"

namespace t2p {

namespace {

const char* kWords[] = {"aurora",  "brook",   "cedar",  "dune",    "ember",  "fjord",  "grove",
                        "harbor",  "island",  "juniper", "karst",  "lagoon", "meadow", "nectar",
                        "orchid",  "prairie", "quartz", "ridge",   "summit", "tundra", "umber",
                        "violet",  "willow",  "zephyr", "canyon",  "delta",  "breeze", "coral"};

std::string random_words(Rng& rng, int count) {
    std::string out;
    for (int i = 0; i < count; ++i) {
        if (i) out.push_back(' ');
        out += kWords[rng.uniform_int(static_cast<int>(std::size(kWords)))];
    }
    return out;
}

RasterImage synth_background(Rng& rng, int w, int h,
                             std::vector<std::pair<double, double>>* centers) {
    RasterImage img(w, h, 3);
    double c0[3], c1[3];
    for (int c = 0; c < 3; ++c) {
        c0[c] = rng.uniform(0.2, 0.9);
        c1[c] = rng.uniform(0.2, 0.9);
    }
    const int mode = rng.uniform_int(3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double t = 0.0;
            if (mode == 0) {
                t = static_cast<double>(y) / (h - 1);
            } else if (mode == 1) {
                t = static_cast<double>(x) / (w - 1);
            } else {
                t = (static_cast<double>(x) / (w - 1) + static_cast<double>(y) / (h - 1)) / 2.0;
            }
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = c0[c] + (c1[c] - c0[c]) * t;
        }
    }

    const int blobs = 1 + rng.uniform_int(4);
    for (int b = 0; b < blobs; ++b) {
        const int shape = rng.uniform_int(3);
        const double cx = rng.uniform(0.12, 0.88) * w;
        const double cy = rng.uniform(0.12, 0.88) * h;
        if (centers) centers->emplace_back(cx / w, cy / h);
        const double rx = rng.uniform(0.05, 0.16) * w;
        const double ry = rng.uniform(0.05, 0.16) * h;
        double col[3];
        for (int c = 0; c < 3; ++c) {
            // push away from the local base color for contrast
            const double base = img.at(static_cast<int>(cx), static_cast<int>(cy), c);
            col[c] = base > 0.5 ? rng.uniform(0.0, 0.25) : rng.uniform(0.75, 1.0);
        }
        const int x0 = std::max(0, static_cast<int>(cx - 3 * rx));
        const int x1 = std::min(w - 1, static_cast<int>(cx + 3 * rx));
        const int y0 = std::max(0, static_cast<int>(cy - 3 * ry));
        const int y1 = std::min(h - 1, static_cast<int>(cy + 3 * ry));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = (x - cx) / rx;
                const double dy = (y - cy) / ry;
                double alpha = 0.0;
                if (shape == 0) {
                    alpha = std::exp(-(dx * dx + dy * dy) / 0.5);
                } else if (shape == 1) {
                    alpha = dx * dx + dy * dy <= 1.0 ? 1.0 : 0.0;
                } else {
                    alpha = std::abs(dx) <= 0.9 && std::abs(dy) <= 0.9 ? 1.0 : 0.0;
                }
                if (alpha <= 0.01) continue;
                for (int c = 0; c < 3; ++c) {
                    img.at(x, y, c) = (1.0 - alpha) * img.at(x, y, c) + alpha * col[c];
                }
            }
        }
    }
    img.clamp01();
    img.quantize8();
    return img;
}

std::vector<TextElement> synth_text_list(Rng& rng) {
    std::vector<TextElement> texts;
    texts.push_back({random_words(rng, 2 + rng.uniform_int(2)), TextAttribute::Title});
    const int subtitles = rng.uniform_int(3);
    for (int i = 0; i < subtitles; ++i) {
        texts.push_back({random_words(rng, 3 + rng.uniform_int(3)), TextAttribute::Subtitle});
    }
    const int bodies = rng.uniform_int(3);
    for (int i = 0; i < bodies; ++i) {
        texts.push_back({random_words(rng, 4 + rng.uniform_int(4)), TextAttribute::Body});
    }
    return texts;
}

double smooth_overlap_fraction(const SmoothRegionMap& a, const TextBox& box) {
    AnchorRegion r{box.x, box.y, box.x + box.width, box.y + box.height, 0, 0.0};
    const PixelRect px = region_pixel_rect(r, a.width, a.height);
    const int total = (px.x1 - px.x0) * (px.y1 - px.y0);
    if (total < 1) return 0.0;
    int inside = 0;
    for (int y = px.y0; y < px.y1; ++y) {
        for (int x = px.x0; x < px.x1; ++x) {
            if (a.at(x, y) > 0.5) ++inside;
        }
    }
    return static_cast<double>(inside) / total;
}

bool place_boxes(Rng& rng, const SmoothRegionMap& smooth, const std::vector<BoxSize>& sizes,
                 const SynthConfig& cfg, Layout* out) {
    out->boxes.clear();
    for (const auto& size : sizes) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_place_tries; ++attempt) {
            TextBox box;
            box.width = size.width;
            box.height = size.height;
            box.x = rng.uniform(0.0, 1.0 - box.width);
            box.y = rng.uniform(0.0, 1.0 - box.height);
            if (smooth_overlap_fraction(smooth, box) < cfg.min_smooth_overlap) continue;
            bool clear = true;
            for (const auto& other : out->boxes) {
                AnchorRegion ra{box.x, box.y, box.x + box.width, box.y + box.height, 0, 0.0};
                AnchorRegion rb{other.x, other.y, other.x + other.width, other.y + other.height, 0, 0.0};
                if (box_iou(ra, rb) > cfg.max_box_iou) {
                    clear = false;
                    break;
                }
            }
            if (!clear) continue;
            out->boxes.push_back(box);
            placed = true;
            break;
        }
        if (!placed) return false;
    }
    return true;
}

std::vector<AnchorRegion> boxes_as_regions(const Layout& layout) {
    std::vector<AnchorRegion> regions;
    regions.reserve(layout.boxes.size());
    for (const auto& b : layout.boxes) {
        regions.push_back({b.x, b.y, b.x + b.width, b.y + b.height, 0, 0.0});
    }
    return regions;
}

}  // namespace

DatasetSample generate_sample(std::uint64_t seed, const SynthConfig& cfg) {
    for (int retry = 0; retry <= cfg.max_background_retries; ++retry) {
        Rng rng(splitmix64(seed) + static_cast<std::uint64_t>(retry));
        DatasetSample sample;
        sample.seed = seed;
        sample.background = synth_background(rng, cfg.canvas_w, cfg.canvas_h, &sample.salient_centers);

        const SaliencyMap sal = spectral_residual(sample.background, cfg.saliency);
        const SaliencyMap sal_map = resize_map(sal, cfg.map_w, cfg.map_h);
        const auto anchors = generate_anchors(cfg.map_w, cfg.map_h, cfg.regions);
        const auto kept = select_smooth_regions(anchors, sal_map, cfg.regions);
        sample.smooth_map = rasterize(kept, cfg.map_w, cfg.map_h);

        sample.texts = synth_text_list(rng);
        const auto sizes = size_boxes(sample.texts);
        if (!place_boxes(rng, sample.smooth_map, sizes, cfg, &sample.boxes)) {
            continue;  // regenerate background with the retry-shifted stream
        }
        const auto regions = boxes_as_regions(sample.boxes);
        const auto raster = rasterize(regions, cfg.map_w, cfg.map_h);
        sample.layout_map = LayoutDistribution(cfg.map_w, cfg.map_h);
        sample.layout_map.values = raster.values;
        return sample;
    }
    throw Error("generate_sample: placement failed after background retries (seed " +
                std::to_string(seed) + ")");
}

std::filesystem::path DatasetManifest::background_path(int i) const {
    return dir / "bg" / (ids[static_cast<size_t>(i)] + ".png");
}
std::filesystem::path DatasetManifest::smooth_map_path(int i) const {
    return dir / "maps" / (ids[static_cast<size_t>(i)] + "_a.png");
}
std::filesystem::path DatasetManifest::layout_map_path(int i) const {
    return dir / "maps" / (ids[static_cast<size_t>(i)] + "_l.png");
}
std::filesystem::path DatasetManifest::record_path(int i) const {
    return dir / "rec" / (ids[static_cast<size_t>(i)] + ".json");
}

DatasetManifest build_dataset(int n, std::uint64_t seed, const std::filesystem::path& out_dir,
                              const SynthConfig& cfg) {
    if (n < 10) throw InvalidInputError("build_dataset: need n >= 10");
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "bg", ec);
    std::filesystem::create_directories(out_dir / "maps", ec);
    std::filesystem::create_directories(out_dir / "rec", ec);
    if (!std::filesystem::exists(out_dir / "rec")) {
        throw Error("build_dataset: cannot create output directory " + out_dir.string());
    }

    std::vector<DatasetSample> samples(static_cast<size_t>(n));
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        samples[static_cast<size_t>(i)] = generate_sample(seed ^ static_cast<std::uint64_t>(i), cfg);
    }

    DatasetManifest manifest;
    manifest.count = n;
    manifest.seed = seed;
    manifest.canvas_w = cfg.canvas_w;
    manifest.canvas_h = cfg.canvas_h;
    manifest.map_w = cfg.map_w;
    manifest.map_h = cfg.map_h;
    manifest.dir = out_dir;
    char buf[16];
    for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "%06d", i);
        manifest.ids.emplace_back(buf);
    }
    const int train_n = (n * 9) / 10;
    for (int i = 0; i < n; ++i) {
        (i < train_n ? manifest.train_ids : manifest.val_ids).push_back(i);
    }

    for (int i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<size_t>(i)];
        save_png(manifest.background_path(i), s.background);
        save_png(manifest.smooth_map_path(i), map_to_image(s.smooth_map));
        save_png(manifest.layout_map_path(i), map_to_image(s.layout_map));
        nlohmann::ordered_json rec;
        rec["id"] = manifest.ids[static_cast<size_t>(i)];
        rec["seed"] = s.seed;
        auto& texts = rec["texts"] = nlohmann::ordered_json::array();
        for (const auto& t : s.texts) {
            texts.push_back({{"text", t.text}, {"attribute", attribute_name(t.attribute)}});
        }
        auto& boxes = rec["boxes"] = nlohmann::ordered_json::array();
        for (const auto& b : s.boxes.boxes) {
            boxes.push_back({{"x", b.x}, {"y", b.y}, {"width", b.width}, {"height", b.height}});
        }
        std::ofstream os(manifest.record_path(i));
        if (!os) throw Error("build_dataset: cannot write record " + manifest.record_path(i).string());
        os << rec.dump(2) << "\n";
    }

    nlohmann::ordered_json j;
    j["version"] = manifest.version;
    j["count"] = manifest.count;
    j["seed"] = manifest.seed;
    j["canvas"] = {{"width", manifest.canvas_w}, {"height", manifest.canvas_h}};
    j["map"] = {{"width", manifest.map_w}, {"height", manifest.map_h}};
    j["ids"] = manifest.ids;
    j["train_ids"] = manifest.train_ids;
    j["val_ids"] = manifest.val_ids;
    std::ofstream os(out_dir / "manifest.json");
    if (!os) throw Error("build_dataset: cannot write manifest");
    os << j.dump(2) << "\n";
    return manifest;
}

DatasetManifest load_dataset_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw MissingResourceError("dataset: cannot open " + manifest_path.string());
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded()) throw LoadError("dataset: invalid manifest JSON");
    DatasetManifest m;
    try {
        m.version = j.at("version").get<int>();
        m.count = j.at("count").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.canvas_w = j.at("canvas").at("width").get<int>();
        m.canvas_h = j.at("canvas").at("height").get<int>();
        m.map_w = j.at("map").at("width").get<int>();
        m.map_h = j.at("map").at("height").get<int>();
        m.ids = j.at("ids").get<std::vector<std::string>>();
        m.train_ids = j.at("train_ids").get<std::vector<int>>();
        m.val_ids = j.at("val_ids").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("dataset: manifest field error: ") + e.what());
    }
    if (static_cast<int>(m.ids.size()) != m.count) throw LoadError("dataset: id list length mismatch");
    m.dir = manifest_path.parent_path();
    return m;
}

namespace {

template <class MapT>
MapT load_binary_map(const std::filesystem::path& path, int w, int h) {
    const RasterImage img = load_image(path);
    if (img.width != w || img.height != h || img.channels != 1) {
        throw LoadError("dataset: unexpected map geometry in " + path.string());
    }
    MapT m(w, h);
    for (size_t i = 0; i < img.values.size(); ++i) m.values[i] = img.values[i] > 0.5 ? 1.0 : 0.0;
    return m;
}

}  // namespace

TrainingSet load_training_set(const DatasetManifest& manifest) {
    TrainingSet set;
    set.train_ids = manifest.train_ids;
    set.val_ids = manifest.val_ids;
    set.samples.resize(static_cast<size_t>(manifest.count));
    for (int i = 0; i < manifest.count; ++i) {
        TrainSample& s = set.samples[static_cast<size_t>(i)];
        s.smooth = load_binary_map<SmoothRegionMap>(manifest.smooth_map_path(i), manifest.map_w,
                                                    manifest.map_h);
        s.layout = load_binary_map<LayoutDistribution>(manifest.layout_map_path(i), manifest.map_w,
                                                       manifest.map_h);
        std::ifstream is(manifest.record_path(i));
        if (!is) throw MissingResourceError("dataset: missing record " + manifest.record_path(i).string());
        nlohmann::json rec = nlohmann::json::parse(is, nullptr, false);
        if (rec.is_discarded()) throw LoadError("dataset: invalid record JSON for sample " + std::to_string(i));
        for (const auto& b : rec.at("boxes")) {
            s.boxes.boxes.push_back({b.at("x").get<double>(), b.at("y").get<double>(),
                                     b.at("width").get<double>(), b.at("height").get<double>()});
        }
        for (const auto& t : rec.at("texts")) {
            s.attrs.push_back(attribute_from_name(t.at("attribute").get<std::string>()));
        }
        if (s.attrs.size() != s.boxes.boxes.size()) {
            throw LoadError("dataset: record texts/boxes mismatch for sample " + std::to_string(i));
        }
    }
    return set;
}

std::vector<TextElement> synth_texts(std::uint64_t seed) {
    Rng rng(splitmix64(seed) ^ 0x5eedf00dULL);
    return synth_text_list(rng);
}

}  // namespace t2p
