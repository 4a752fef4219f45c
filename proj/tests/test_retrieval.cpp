#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "t2p/kernels.hpp"
#include "t2p/retrieval.hpp"
#include "test_util.hpp"

using namespace t2p;

namespace {

EmbeddingVector random_embedding(int dim, Rng& rng) {
    EmbeddingVector v(static_cast<size_t>(dim));
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

// Exhaustive ranking straight from the definition with the documented
// tie-break.
std::vector<ScoredEntry> brute_force_rank(const EmbeddingIndex& index, const EmbeddingVector& q, int k) {
    std::vector<ScoredEntry> all;
    for (size_t i = 0; i < index.size(); ++i) {
        all.push_back({index.id_at(i), cosine_similarity(q, index.vector_at(i))});
    }
    std::sort(all.begin(), all.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.image_id < b.image_id;
    });
    all.resize(std::min<size_t>(all.size(), static_cast<size_t>(k)));
    return all;
}

}  // namespace

TEST_SUITE("retrieval") {

TEST_CASE("cosine similarity basics") {
    const EmbeddingVector a{1.0f, 2.0f, -3.0f};
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    const EmbeddingVector e1{1.0f, 0.0f}, e2{0.0f, 1.0f};
    CHECK(cosine_similarity(e1, e2) == doctest::Approx(0.0));
    CHECK_THROWS_AS(cosine_similarity(e1, EmbeddingVector{0.0f, 0.0f}), InvalidInputError);
    CHECK_THROWS_AS(cosine_similarity(e1, a), ConfigError);

    Rng rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        const auto u = random_embedding(16, rng);
        const auto v = random_embedding(16, rng);
        double dot = 0, nu = 0, nv = 0;
        for (int i = 0; i < 16; ++i) {
            dot += static_cast<double>(u[static_cast<size_t>(i)]) * v[static_cast<size_t>(i)];
            nu += static_cast<double>(u[static_cast<size_t>(i)]) * u[static_cast<size_t>(i)];
            nv += static_cast<double>(v[static_cast<size_t>(i)]) * v[static_cast<size_t>(i)];
        }
        CHECK(std::abs(cosine_similarity(u, v) - dot / std::sqrt(nu * nv)) <= 1e-9);
    }
}

TEST_CASE("top_k: single entry, exact-match query, oracle equality") {
    Rng rng(52);
    EmbeddingIndex one(8);
    one.add("only", "only.png", random_embedding(8, rng));
    const auto r = one.top_k(random_embedding(8, rng), 3);
    REQUIRE(r.size() == 1);
    CHECK(r[0].image_id == "only");

    EmbeddingIndex index(12);
    EmbeddingVector stored;
    for (int i = 0; i < 60; ++i) {
        auto v = random_embedding(12, rng);
        if (i == 37) stored = v;
        index.add("img" + std::to_string(i), "p" + std::to_string(i), v);
    }
    const auto top = index.top_k(stored, 1);
    CHECK(top[0].image_id == "img37");
    CHECK(top[0].score == doctest::Approx(1.0).epsilon(1e-9));

    for (int trial = 0; trial < 25; ++trial) {
        const auto q = random_embedding(12, rng);
        const int k = 1 + rng.uniform_int(60);
        const auto got = index.top_k(q, k);
        const auto want = brute_force_rank(index, q, k);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].image_id == want[i].image_id);
            CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
        }
    }
}

TEST_CASE("top_k error paths") {
    EmbeddingIndex empty(4);
    Rng rng(53);
    CHECK_THROWS_AS(empty.top_k(random_embedding(4, rng), 1), InvalidInputError);
    EmbeddingIndex index(4);
    index.add("a", "a.png", random_embedding(4, rng));
    CHECK_THROWS_AS(index.top_k(random_embedding(5, rng), 1), ConfigError);
    CHECK_THROWS_AS(index.top_k(random_embedding(4, rng), 0), InvalidInputError);
    CHECK_THROWS_AS(index.top_k(EmbeddingVector{0.0f, 0.0f, 0.0f, 0.0f}, 1), InvalidInputError);
}

TEST_CASE("property: positive query scaling never changes the ranking") {
    Rng rng(54);
    EmbeddingIndex index(16);
    for (int i = 0; i < 80; ++i) index.add("e" + std::to_string(i), "", random_embedding(16, rng));
    const auto q = random_embedding(16, rng);
    const auto base = index.top_k(q, 80);
    for (double c : {0.25, 2.0, 16.0, 3.7, 0.013}) {
        EmbeddingVector scaled = q;
        for (auto& v : scaled) v = static_cast<float>(v * c);
        const auto got = index.top_k(scaled, 80);
        REQUIRE(got.size() == base.size());
        for (size_t i = 0; i < got.size(); ++i) CHECK(got[i].image_id == base[i].image_id);
    }
}

TEST_CASE("property: parallel scan ranking equals serial") {
    Rng rng(55);
    EmbeddingIndex index(24);
    for (int i = 0; i < 600; ++i) index.add("e" + std::to_string(i), "", random_embedding(24, rng));
    const auto q = random_embedding(24, rng);
    kernels::set_parallel(false);
    const auto serial = index.top_k(q, 600);
    kernels::set_parallel(true);
    const auto parallel = index.top_k(q, 600);
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].image_id == parallel[i].image_id);
        CHECK(serial[i].score == parallel[i].score);
    }
}

TEST_CASE("toy text embedding: deterministic, unit norm, n-gram similarity ordering") {
    HashedNgramTextEmbedder embedder(128);
    const auto a = embedder.embed("wedding");
    const auto b = embedder.embed("wedding");
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
    double norm = 0.0;
    for (float v : a) norm += static_cast<double>(v) * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));

    const auto near = embedder.embed("wedding day");
    const auto far = embedder.embed("quarterly report");
    CHECK(cosine_similarity(a, near) > cosine_similarity(a, far));
    CHECK_THROWS_AS(embedder.embed(""), InvalidInputError);
}

TEST_CASE("toy image embedding: deterministic unit vector") {
    Rng rng(56);
    RasterImage img(32, 24, 3);
    for (auto& v : img.values) v = rng.uniform();
    ThumbnailProjectionImageEmbedder embedder(64);
    const auto a = embedder.embed(img);
    const auto b = embedder.embed(img);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
    double norm = 0.0;
    for (float v : a) norm += static_cast<double>(v) * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("index io: round-trip is bit-exact; corruption and absence are reported") {
    test::TempDir tmp("index");
    Rng rng(57);
    EmbeddingIndex index(16);
    for (int i = 0; i < 20; ++i) {
        index.add("img" + std::to_string(i), "images/" + std::to_string(i) + ".png",
                  random_embedding(16, rng));
    }
    const auto manifest = tmp.path() / "index.json";
    index.save(manifest);
    const auto loaded = EmbeddingIndex::load(manifest);
    REQUIRE(loaded.size() == index.size());
    CHECK(loaded.dim() == 16);
    for (size_t i = 0; i < index.size(); ++i) {
        CHECK(loaded.id_at(i) == index.id_at(i));
        CHECK(loaded.path_at(i) == index.path_at(i));
        const auto va = index.vector_at(i), vb = loaded.vector_at(i);
        CHECK(std::memcmp(va.data(), vb.data(), va.size() * sizeof(float)) == 0);
    }

    // Truncate the data file: the row-size mismatch must be named.
    {
        std::ofstream bf(tmp.path() / "index.bin", std::ios::binary | std::ios::trunc);
        const std::vector<float> short_row(16 * 19 + 7, 0.5f);
        bf.write(reinterpret_cast<const char*>(short_row.data()),
                 static_cast<std::streamsize>(short_row.size() * sizeof(float)));
    }
    CHECK_THROWS_WITH_AS(EmbeddingIndex::load(manifest), doctest::Contains("row length"), LoadError);
    CHECK_THROWS_AS(EmbeddingIndex::load(tmp.path() / "nope.json"), MissingResourceError);
}

TEST_CASE("join_texts joins with single spaces in order") {
    CHECK(join_texts({"a", "b c", "d"}) == "a b c d");
    CHECK(join_texts({}) == "");
}

}  // TEST_SUITE
