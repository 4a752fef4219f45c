#include "t2p/stylizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <opencv2/imgproc.hpp>

#include "json.hpp"

#include "t2p/kernels.hpp"
#include "t2p/rng.hpp"
#include "t2p/smooth_region.hpp"

namespace t2p {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double x = a[i] - b[i];
        d += x * x;
    }
    return d;
}

double color_dist(const Rgb& a, const Rgb& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                     (a[2] - b[2]) * (a[2] - b[2]));
}

double compute_inertia(const std::vector<std::vector<double>>& pts, const KmeansResult& r) {
    double acc = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        acc += sq_dist(pts[i], r.centers[static_cast<size_t>(r.assignments[i])]);
    }
    return acc;
}

}  // namespace

KmeansResult kmeans(const std::vector<std::vector<double>>& points, int m, std::uint64_t seed,
                    int max_iters) {
    const int n = static_cast<int>(points.size());
    if (m < 1 || m > n) throw InvalidInputError("kmeans: need 1 <= m <= point count");
    const int dim = static_cast<int>(points[0].size());
    for (const auto& p : points) {
        if (static_cast<int>(p.size()) != dim) throw InvalidInputError("kmeans: ragged points");
    }

    Rng rng(seed);
    KmeansResult res;
    res.centers.reserve(static_cast<size_t>(m));

    // k-means++ seeding.
    res.centers.push_back(points[static_cast<size_t>(rng.uniform_int(n))]);
    std::vector<double> d2(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) d2[static_cast<size_t>(i)] = sq_dist(points[static_cast<size_t>(i)], res.centers[0]);
    while (static_cast<int>(res.centers.size()) < m) {
        double total = 0.0;
        for (double d : d2) total += d;
        int pick;
        if (total <= 0.0) {
            pick = rng.uniform_int(n);
        } else {
            const double u = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += d2[static_cast<size_t>(i)];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        }
        res.centers.push_back(points[static_cast<size_t>(pick)]);
        for (int i = 0; i < n; ++i) {
            d2[static_cast<size_t>(i)] = std::min(d2[static_cast<size_t>(i)],
                                                  sq_dist(points[static_cast<size_t>(i)], res.centers.back()));
        }
    }

    // Lloyd iterations over a flattened point matrix.
    std::vector<double> flat(static_cast<size_t>(n) * dim);
    for (int i = 0; i < n; ++i) {
        std::copy(points[static_cast<size_t>(i)].begin(), points[static_cast<size_t>(i)].end(),
                  flat.begin() + static_cast<size_t>(i) * dim);
    }
    res.assignments.assign(static_cast<size_t>(n), 0);
    std::vector<double> dist(static_cast<size_t>(n));
    std::vector<double> cflat(static_cast<size_t>(m) * dim);
    double prev_inertia = -1.0;
    for (int iter = 0; iter < max_iters; ++iter) {
        for (int c = 0; c < m; ++c) {
            std::copy(res.centers[static_cast<size_t>(c)].begin(), res.centers[static_cast<size_t>(c)].end(),
                      cflat.begin() + static_cast<size_t>(c) * dim);
        }
        kernels::nearest_center(flat.data(), n, dim, cflat.data(), m, res.assignments.data(), dist.data());
        double inertia = 0.0;
        for (double d : dist) inertia += d;
        if (prev_inertia >= 0.0 && inertia > prev_inertia * (1.0 + 1e-9) + 1e-12) {
            throw StateError("kmeans: inertia increased");
        }
        res.iterations = iter + 1;
        const bool converged =
            prev_inertia >= 0.0 && std::abs(prev_inertia - inertia) <= 1e-6 * std::max(inertia, 1e-30);
        prev_inertia = inertia;
        res.inertia = inertia;
        if (converged) break;

        std::vector<std::vector<double>> sums(static_cast<size_t>(m), std::vector<double>(dim, 0.0));
        std::vector<int> counts(static_cast<size_t>(m), 0);
        for (int i = 0; i < n; ++i) {
            const int c = res.assignments[static_cast<size_t>(i)];
            ++counts[static_cast<size_t>(c)];
            for (int jd = 0; jd < dim; ++jd) {
                sums[static_cast<size_t>(c)][static_cast<size_t>(jd)] +=
                    points[static_cast<size_t>(i)][static_cast<size_t>(jd)];
            }
        }
        for (int c = 0; c < m; ++c) {
            if (counts[static_cast<size_t>(c)] == 0) continue;  // keep previous center
            for (int jd = 0; jd < dim; ++jd) {
                res.centers[static_cast<size_t>(c)][static_cast<size_t>(jd)] =
                    sums[static_cast<size_t>(c)][static_cast<size_t>(jd)] / counts[static_cast<size_t>(c)];
            }
        }
    }
    res.inertia = compute_inertia(points, res);
    return res;
}

StyleLibrary build_library(const std::vector<StyleTuple>& tuples, int m, std::uint64_t seed) {
    if (m < 1 || tuples.size() < static_cast<size_t>(m)) {
        throw InvalidInputError("build_library: need at least M tuples");
    }
    std::vector<std::vector<double>> pts;
    pts.reserve(tuples.size());
    for (const auto& t : tuples) {
        pts.emplace_back(t.embedding.begin(), t.embedding.end());
    }
    const auto km = kmeans(pts, m, seed);

    StyleLibrary lib;
    for (int c = 0; c < m; ++c) {
        std::vector<int> members;
        for (size_t i = 0; i < tuples.size(); ++i) {
            if (km.assignments[i] == c) members.push_back(static_cast<int>(i));
        }
        if (members.empty()) continue;

        StyleTuple center;
        std::vector<double> mean(tuples[0].embedding.size(), 0.0);
        for (int i : members) {
            for (size_t jd = 0; jd < mean.size(); ++jd) mean[jd] += tuples[static_cast<size_t>(i)].embedding[jd];
        }
        double norm = 0.0;
        for (double v : mean) norm += v * v;
        norm = std::sqrt(norm);
        center.embedding.resize(mean.size());
        for (size_t jd = 0; jd < mean.size(); ++jd) {
            center.embedding[jd] = static_cast<float>(norm > 1e-12 ? mean[jd] / norm
                                                                   : tuples[static_cast<size_t>(members[0])].embedding[jd]);
        }

        auto medoid = [&](auto color_of) {
            int best = members[0];
            double best_sum = -1.0;
            for (int i : members) {
                double s = 0.0;
                for (int j : members) {
                    s += color_dist(color_of(tuples[static_cast<size_t>(i)]), color_of(tuples[static_cast<size_t>(j)]));
                }
                if (best_sum < 0.0 || s < best_sum) {
                    best_sum = s;
                    best = i;
                }
            }
            return color_of(tuples[static_cast<size_t>(best)]);
        };
        center.background_color = medoid([](const StyleTuple& t) { return t.background_color; });
        center.text_color = medoid([](const StyleTuple& t) { return t.text_color; });

        std::map<std::string, int> freq;
        for (int i : members) ++freq[tuples[static_cast<size_t>(i)].font];
        int best_count = -1;
        for (const auto& [font, count] : freq) {
            if (count > best_count) {
                best_count = count;
                center.font = font;
            }
        }
        lib.centers.push_back(std::move(center));
    }
    if (lib.centers.empty()) throw StateError("build_library: clustering produced no centers");
    return lib;
}

StyleChoice match_style(const StyleLibrary& library, std::span<const float> r, const Rgb& background,
                        double w) {
    if (library.centers.empty()) throw InvalidInputError("match_style: empty library");
    int best = 0;
    double best_score = -1e300;
    for (size_t m = 0; m < library.centers.size(); ++m) {
        const auto& c = library.centers[m];
        const double cos = cosine_similarity(r, c.embedding);
        const double cdist = color_dist(background, c.background_color) / std::sqrt(3.0);
        const double score = w * cos + (1.0 - w) * (1.0 - cdist);
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(m);
        }
    }
    StyleChoice choice;
    choice.text_color = library.centers[static_cast<size_t>(best)].text_color;
    choice.font = library.centers[static_cast<size_t>(best)].font;
    if (contrast_ratio(choice.text_color, background) < 1.5) {
        const Rgb black{0.0, 0.0, 0.0}, white{1.0, 1.0, 1.0};
        choice.text_color = contrast_ratio(black, background) >= contrast_ratio(white, background) ? black : white;
        choice.contrast_flipped = true;
    }
    return choice;
}

Rgb sample_background_color(const RasterImage& image, const TextBox& box) {
    if (box.x < -1e-9 || box.y < -1e-9 || box.x + box.width > 1.0 + 1e-9 ||
        box.y + box.height > 1.0 + 1e-9 || box.width <= 0.0 || box.height <= 0.0) {
        throw InvalidInputError("sample_background_color: box out of canvas");
    }
    AnchorRegion r{box.x, box.y, box.x + box.width, box.y + box.height, 0, 0.0};
    PixelRect px = region_pixel_rect(r, image.width, image.height);
    if (px.x1 <= px.x0) {
        px.x0 = std::min(image.width - 1, static_cast<int>(box.x * image.width));
        px.x1 = px.x0 + 1;
    }
    if (px.y1 <= px.y0) {
        px.y0 = std::min(image.height - 1, static_cast<int>(box.y * image.height));
        px.y1 = px.y0 + 1;
    }
    Rgb acc{0.0, 0.0, 0.0};
    int count = 0;
    for (int y = px.y0; y < px.y1; ++y) {
        for (int x = px.x0; x < px.x1; ++x) {
            for (int c = 0; c < 3; ++c) {
                acc[static_cast<size_t>(c)] += image.channels == 3 ? image.at(x, y, c) : image.at(x, y);
            }
            ++count;
        }
    }
    for (auto& v : acc) v /= count;
    return acc;
}

double relative_luminance(const Rgb& c) {
    auto lin = [](double v) {
        v = std::clamp(v, 0.0, 1.0);
        return v <= 0.03928 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
    };
    return 0.2126 * lin(c[0]) + 0.7152 * lin(c[1]) + 0.0722 * lin(c[2]);
}

double contrast_ratio(const Rgb& a, const Rgb& b) {
    const double la = relative_luminance(a), lb = relative_luminance(b);
    const double hi = std::max(la, lb), lo = std::min(la, lb);
    return (hi + 0.05) / (lo + 0.05);
}

std::string rgb_to_hex(const Rgb& c) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(std::lround(std::clamp(c[0], 0.0, 1.0) * 255.0)),
                  static_cast<int>(std::lround(std::clamp(c[1], 0.0, 1.0) * 255.0)),
                  static_cast<int>(std::lround(std::clamp(c[2], 0.0, 1.0) * 255.0)));
    return buf;
}

Rgb rgb_from_hex(const std::string& hex) {
    if (hex.size() != 7 || hex[0] != '#') throw LoadError("bad hex color: " + hex);
    auto nib = [&](size_t i) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(hex[i])));
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        throw LoadError("bad hex color: " + hex);
    };
    Rgb out;
    for (int c = 0; c < 3; ++c) {
        out[static_cast<size_t>(c)] = (nib(1 + 2 * static_cast<size_t>(c)) * 16 + nib(2 + 2 * static_cast<size_t>(c))) / 255.0;
    }
    return out;
}

void StyleLibrary::save(const std::filesystem::path& path) const {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["count"] = centers.size();
    auto& arr = j["centers"] = nlohmann::ordered_json::array();
    for (const auto& c : centers) {
        nlohmann::ordered_json e;
        e["embedding"] = c.embedding;
        e["background_color"] = rgb_to_hex(c.background_color);
        e["text_color"] = rgb_to_hex(c.text_color);
        e["font"] = c.font;
        arr.push_back(std::move(e));
    }
    std::ofstream os(path);
    if (!os) throw Error("styles.save: cannot write " + path.string());
    os << j.dump(2) << "\n";
}

StyleLibrary StyleLibrary::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingResourceError("styles.load: cannot open " + path.string());
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded()) throw LoadError("styles.load: invalid JSON in " + path.string());
    StyleLibrary lib;
    try {
        for (const auto& e : j.at("centers")) {
            StyleTuple c;
            c.embedding = e.at("embedding").get<EmbeddingVector>();
            c.background_color = rgb_from_hex(e.at("background_color").get<std::string>());
            c.text_color = rgb_from_hex(e.at("text_color").get<std::string>());
            c.font = e.at("font").get<std::string>();
            lib.centers.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw LoadError(std::string("styles.load: ") + ex.what());
    }
    if (lib.centers.empty()) throw LoadError("styles.load: empty library");
    return lib;
}

FontRegistry FontRegistry::builtin() {
    FontRegistry reg;
    reg.fonts_["sans"] = {cv::FONT_HERSHEY_SIMPLEX, 1.0, false};
    reg.fonts_["sans-bold"] = {cv::FONT_HERSHEY_DUPLEX, 1.6, false};
    reg.fonts_["sans-italic"] = {cv::FONT_HERSHEY_SIMPLEX, 1.0, true};
    reg.fonts_["serif"] = {cv::FONT_HERSHEY_COMPLEX, 1.0, false};
    reg.fonts_["serif-bold"] = {cv::FONT_HERSHEY_TRIPLEX, 1.6, false};
    reg.fonts_["serif-small"] = {cv::FONT_HERSHEY_COMPLEX_SMALL, 1.0, false};
    reg.fonts_["script"] = {cv::FONT_HERSHEY_SCRIPT_SIMPLEX, 1.0, false};
    reg.fonts_["script-bold"] = {cv::FONT_HERSHEY_SCRIPT_COMPLEX, 1.4, false};
    reg.fonts_["plain"] = {cv::FONT_HERSHEY_PLAIN, 1.0, false};
    return reg;
}

FontRegistry FontRegistry::from_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingResourceError("fonts: cannot open " + path.string());
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded()) throw LoadError("fonts: invalid JSON in " + path.string());
    FontRegistry reg;
    for (const auto& [id, spec] : j.at("fonts").items()) {
        FontSpec f;
        f.face = spec.at("face").get<int>();
        f.thickness_scale = spec.value("thickness_scale", 1.0);
        f.italic = spec.value("italic", false);
        reg.fonts_[id] = f;
    }
    if (reg.fonts_.empty()) throw LoadError("fonts: empty registry in " + path.string());
    return reg;
}

const FontSpec& FontRegistry::get(const std::string& id) const {
    const auto it = fonts_.find(id);
    if (it == fonts_.end()) throw MissingResourceError("font not in registry: " + id);
    return it->second;
}

std::vector<std::string> FontRegistry::ids() const {
    std::vector<std::string> out;
    out.reserve(fonts_.size());
    for (const auto& [id, _] : fonts_) out.push_back(id);
    return out;
}

std::vector<StyleTuple> synth_style_corpus(int n, int styles, std::uint64_t seed,
                                           const TextEmbedder& embedder, const FontRegistry& fonts,
                                           double jitter) {
    if (n < styles || styles < 1) throw InvalidInputError("synth_style_corpus: need n >= styles >= 1");
    static const char* kThemes[] = {"sunset festival", "tech meetup",   "cheese market",
                                    "jazz evening",    "city marathon", "art workshop",
                                    "coffee tasting",  "book fair",     "garden tour",
                                    "winter ball"};
    const auto font_ids = fonts.ids();
    Rng rng(seed);
    std::vector<StyleTuple> base;
    for (int s = 0; s < styles; ++s) {
        StyleTuple t;
        const std::string phrase =
            std::string(kThemes[static_cast<size_t>(s) % std::size(kThemes)]) + " no" + std::to_string(s);
        t.embedding = embedder.embed(phrase);
        for (auto& v : t.background_color) v = std::round(rng.uniform() * 255.0) / 255.0;
        const bool dark_bg = relative_luminance(t.background_color) < 0.25;
        t.text_color = dark_bg ? Rgb{1.0, 1.0, 1.0}
                               : Rgb{std::round(rng.uniform(0.0, 0.25) * 255.0) / 255.0,
                                     std::round(rng.uniform(0.0, 0.25) * 255.0) / 255.0,
                                     std::round(rng.uniform(0.0, 0.25) * 255.0) / 255.0};
        t.font = font_ids[static_cast<size_t>(s) % font_ids.size()];
        base.push_back(std::move(t));
    }
    std::vector<StyleTuple> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        StyleTuple t = base[static_cast<size_t>(i % styles)];
        if (jitter > 0.0) {
            double norm = 0.0;
            std::vector<double> v(t.embedding.begin(), t.embedding.end());
            for (auto& x : v) {
                x += jitter * rng.normal();
                norm += x * x;
            }
            norm = std::sqrt(norm);
            for (size_t jd = 0; jd < v.size(); ++jd) t.embedding[jd] = static_cast<float>(v[jd] / norm);
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<StyleTuple> load_style_tuples(const std::filesystem::path& path,
                                          const TextEmbedder& embedder) {
    std::ifstream is(path);
    if (!is) throw MissingResourceError("tuples: cannot open " + path.string());
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded() || !j.is_array()) throw LoadError("tuples: expected a JSON array");
    std::vector<StyleTuple> out;
    for (const auto& e : j) {
        StyleTuple t;
        if (e.contains("embedding")) {
            t.embedding = e.at("embedding").get<EmbeddingVector>();
        } else {
            t.embedding = embedder.embed(e.at("text").get<std::string>());
        }
        t.background_color = rgb_from_hex(e.at("background_color").get<std::string>());
        t.text_color = rgb_from_hex(e.at("text_color").get<std::string>());
        t.font = e.at("font").get<std::string>();
        out.push_back(std::move(t));
    }
    if (out.empty()) throw LoadError("tuples: empty list in " + path.string());
    return out;
}

void save_style_tuples(const std::filesystem::path& path, const std::vector<StyleTuple>& tuples) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& t : tuples) {
        nlohmann::ordered_json e;
        e["embedding"] = t.embedding;
        e["background_color"] = rgb_to_hex(t.background_color);
        e["text_color"] = rgb_to_hex(t.text_color);
        e["font"] = t.font;
        arr.push_back(std::move(e));
    }
    std::ofstream os(path);
    if (!os) throw Error("tuples: cannot write " + path.string());
    os << arr.dump(2) << "\n";
}

}  // namespace t2p
