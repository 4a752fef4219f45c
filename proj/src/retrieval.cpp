#include "t2p/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

#include "t2p/kernels.hpp"
#include "t2p/rng.hpp"

namespace t2p {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t h, const char* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= kFnvPrime;
    }
    return h;
}

void hash_into(std::vector<double>& acc, const std::string& token) {
    const std::uint64_t h = fnv1a(kFnvOffset, token.data(), token.size());
    const size_t bucket = h % acc.size();
    acc[bucket] += (h & (1ULL << 63)) ? -1.0 : 1.0;
}

EmbeddingVector normalized(const std::vector<double>& acc) {
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    EmbeddingVector out(acc.size());
    if (norm < 1e-12) {
        out[0] = 1.0f;
        return out;
    }
    for (size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / norm);
    return out;
}

}  // namespace

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw ConfigError("cosine_similarity: dimension mismatch");
    if (a.empty()) throw InvalidInputError("cosine_similarity: empty vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) throw InvalidInputError("cosine_similarity: zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void EmbeddingIndex::add(std::string image_id, std::string image_path, const EmbeddingVector& v) {
    if (dim_ == 0) dim_ = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != dim_) throw ConfigError("index.add: dimension mismatch");
    for (float x : v) {
        if (!std::isfinite(x)) throw InvalidInputError("index.add: non-finite embedding value");
    }
    for (const auto& id : ids_) {
        if (id == image_id) throw InvalidInputError("index.add: duplicate image id " + image_id);
    }
    ids_.push_back(std::move(image_id));
    paths_.push_back(std::move(image_path));
    matrix_.insert(matrix_.end(), v.begin(), v.end());
}

const std::string& EmbeddingIndex::path_for(const std::string& image_id) const {
    for (size_t i = 0; i < ids_.size(); ++i) {
        if (ids_[i] == image_id) return paths_[i];
    }
    throw MissingResourceError("index: unknown image id " + image_id);
}

std::vector<ScoredEntry> EmbeddingIndex::top_k(std::span<const float> query, int k) const {
    if (ids_.empty()) throw InvalidInputError("top_k: empty index");
    if (k < 1) throw InvalidInputError("top_k: k must be >= 1");
    if (static_cast<int>(query.size()) != dim_) throw ConfigError("top_k: query dimension mismatch");
    double qn = 0.0;
    std::vector<double> q(query.size());
    for (size_t i = 0; i < query.size(); ++i) {
        q[i] = query[i];
        qn += q[i] * q[i];
    }
    if (qn <= 0.0) throw InvalidInputError("top_k: zero query vector");
    qn = std::sqrt(qn);

    const int n = static_cast<int>(ids_.size());
    std::vector<double> dots(static_cast<size_t>(n));
    kernels::batch_dot_f32(matrix_.data(), n, dim_, q.data(), dots.data());

    std::vector<double> scores(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double en = 0.0;
        const float* row = matrix_.data() + static_cast<size_t>(i) * dim_;
        for (int j = 0; j < dim_; ++j) en += static_cast<double>(row[j]) * row[j];
        if (en <= 0.0) throw InvalidInputError("top_k: zero vector stored for " + ids_[static_cast<size_t>(i)]);
        scores[static_cast<size_t>(i)] = dots[static_cast<size_t>(i)] / (qn * std::sqrt(en));
    }

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)]) {
            return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
        }
        return ids_[static_cast<size_t>(a)] < ids_[static_cast<size_t>(b)];
    });

    std::vector<ScoredEntry> out;
    const int kk = std::min(k, n);
    out.reserve(static_cast<size_t>(kk));
    for (int i = 0; i < kk; ++i) {
        out.push_back({ids_[static_cast<size_t>(order[static_cast<size_t>(i)])],
                       scores[static_cast<size_t>(order[static_cast<size_t>(i)])]});
    }
    return out;
}

void EmbeddingIndex::save(const std::filesystem::path& manifest_path) const {
    const std::filesystem::path data_name = manifest_path.stem().string() + ".bin";
    const std::filesystem::path data_path = manifest_path.parent_path() / data_name;
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["dim"] = dim_;
    j["count"] = ids_.size();
    j["dtype"] = "float32";
    j["data"] = data_name.string();
    j["ids"] = ids_;
    j["paths"] = paths_;
    std::ofstream mf(manifest_path);
    if (!mf) throw Error("index.save: cannot write " + manifest_path.string());
    mf << j.dump(2) << "\n";
    std::ofstream bf(data_path, std::ios::binary | std::ios::trunc);
    if (!bf) throw Error("index.save: cannot write " + data_path.string());
    bf.write(reinterpret_cast<const char*>(matrix_.data()),
             static_cast<std::streamsize>(matrix_.size() * sizeof(float)));
    if (!bf) throw Error("index.save: write failed");
}

EmbeddingIndex EmbeddingIndex::load(const std::filesystem::path& manifest_path) {
    std::ifstream mf(manifest_path);
    if (!mf) throw MissingResourceError("index.load: cannot open " + manifest_path.string());
    nlohmann::json j = nlohmann::json::parse(mf, nullptr, false);
    if (j.is_discarded()) throw LoadError("index.load: invalid JSON in " + manifest_path.string());
    EmbeddingIndex idx;
    try {
        idx.dim_ = j.at("dim").get<int>();
        idx.ids_ = j.at("ids").get<std::vector<std::string>>();
        idx.paths_ = j.at("paths").get<std::vector<std::string>>();
        const auto count = j.at("count").get<size_t>();
        if (count != idx.ids_.size() || count != idx.paths_.size()) {
            throw LoadError("index.load: count does not match id/path lists");
        }
        if (j.at("dtype").get<std::string>() != "float32") {
            throw LoadError("index.load: unsupported dtype");
        }
        const auto data_path = manifest_path.parent_path() / j.at("data").get<std::string>();
        std::ifstream bf(data_path, std::ios::binary);
        if (!bf) throw MissingResourceError("index.load: missing data file " + data_path.string());
        bf.seekg(0, std::ios::end);
        const auto bytes = static_cast<size_t>(bf.tellg());
        bf.seekg(0);
        const size_t expect = count * static_cast<size_t>(idx.dim_) * sizeof(float);
        if (bytes != expect) {
            throw LoadError("index.load: data size " + std::to_string(bytes) + " != expected " +
                            std::to_string(expect) + " (row length mismatch)");
        }
        idx.matrix_.resize(count * static_cast<size_t>(idx.dim_));
        bf.read(reinterpret_cast<char*>(idx.matrix_.data()), static_cast<std::streamsize>(bytes));
        if (!bf) throw LoadError("index.load: truncated data file");
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("index.load: manifest field error: ") + e.what());
    }
    if (idx.dim_ < 1) throw LoadError("index.load: invalid dim");
    if (idx.ids_.empty()) throw InvalidInputError("index.load: empty index");
    std::unordered_set<std::string> seen;
    for (size_t i = 0; i < idx.ids_.size(); ++i) {
        if (!seen.insert(idx.ids_[i]).second) throw LoadError("index.load: duplicate id " + idx.ids_[i]);
        for (int jd = 0; jd < idx.dim_; ++jd) {
            const float v = idx.matrix_[i * static_cast<size_t>(idx.dim_) + static_cast<size_t>(jd)];
            if (!std::isfinite(v)) {
                throw LoadError("index.load: non-finite value in row " + std::to_string(i) + " (" +
                                idx.ids_[i] + ")");
            }
        }
    }
    return idx;
}

EmbeddingVector HashedNgramTextEmbedder::embed(const std::string& text) const {
    if (text.empty()) throw InvalidInputError("embed: empty text");
    std::string norm;
    norm.reserve(text.size() + 2);
    norm.push_back(' ');
    bool last_space = true;
    for (char c : text) {
        const char lc = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        const bool space = std::isspace(static_cast<unsigned char>(lc)) != 0;
        if (space && last_space) continue;
        norm.push_back(space ? ' ' : lc);
        last_space = space;
    }
    if (!last_space) norm.push_back(' ');

    std::vector<double> acc(static_cast<size_t>(dim_), 0.0);
    for (size_t i = 0; i + 3 <= norm.size(); ++i) {
        hash_into(acc, "3:" + norm.substr(i, 3));
    }
    size_t start = 0;
    for (size_t i = 0; i <= norm.size(); ++i) {
        if (i == norm.size() || norm[i] == ' ') {
            if (i > start) hash_into(acc, "w:" + norm.substr(start, i - start));
            start = i + 1;
        }
    }
    return normalized(acc);
}

EmbeddingVector ThumbnailProjectionImageEmbedder::embed(const RasterImage& image) const {
    if (!image.valid()) throw InvalidInputError("embed: invalid image");
    RasterImage thumb = resize(image, 8, 8);
    if (thumb.channels == 1) {
        RasterImage rgb(8, 8, 3);
        for (int i = 0; i < 64; ++i) {
            rgb.values[static_cast<size_t>(i) * 3] = thumb.values[static_cast<size_t>(i)];
            rgb.values[static_cast<size_t>(i) * 3 + 1] = thumb.values[static_cast<size_t>(i)];
            rgb.values[static_cast<size_t>(i) * 3 + 2] = thumb.values[static_cast<size_t>(i)];
        }
        thumb = std::move(rgb);
    }
    // Fixed +-1 projection derived from splitmix64; version bump changes the
    // constant.
    constexpr std::uint64_t kProjectionSeed = 0x746f79696d673131ULL;
    std::vector<double> acc(static_cast<size_t>(dim_), 0.0);
    const size_t nfeat = thumb.values.size();
    for (int d = 0; d < dim_; ++d) {
        double dot = 0.0;
        for (size_t jf = 0; jf < nfeat; ++jf) {
            const std::uint64_t h =
                splitmix64(kProjectionSeed + static_cast<std::uint64_t>(d) * nfeat + jf);
            dot += (h & 1ULL) ? thumb.values[jf] : -thumb.values[jf];
        }
        acc[static_cast<size_t>(d)] = dot;
    }
    return normalized(acc);
}

std::string join_texts(const std::vector<std::string>& texts) {
    std::string out;
    for (size_t i = 0; i < texts.size(); ++i) {
        if (i) out.push_back(' ');
        out += texts[i];
    }
    return out;
}

}  // namespace t2p
