#include "doctest.h"

#include <cmath>

#include "t2p/saliency.hpp"
#include "test_util.hpp"

using namespace t2p;

namespace {

RasterImage constant_image(int w, int h, double v) {
    RasterImage img(w, h, 1, v);
    return img;
}

RasterImage white_square_image() {
    RasterImage img(64, 64, 1, 0.0);
    for (int y = 28; y < 36; ++y) {
        for (int x = 28; x < 36; ++x) img.at(x, y) = 1.0;
    }
    return img;
}

std::pair<int, int> argmax(const SaliencyMap& m) {
    int bx = 0, by = 0;
    double best = -1.0;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (m.at(x, y) > best) {
                best = m.at(x, y);
                bx = x;
                by = y;
            }
        }
    }
    return {bx, by};
}

}  // namespace

TEST_SUITE("saliency") {

TEST_CASE("constant image collapses to the all-zero map") {
    const auto map = spectral_residual(constant_image(64, 48, 0.5));
    CHECK(map.width == 64);
    CHECK(map.height == 48);
    for (double v : map.values) CHECK(v <= 0.05);
}

TEST_CASE("white square on black: inside mean >= 3x outside mean") {
    const auto map = spectral_residual(white_square_image());
    double inside = 0.0, outside = 0.0;
    int n_in = 0, n_out = 0;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            const bool in = x >= 28 && x < 36 && y >= 28 && y < 36;
            (in ? inside : outside) += map.at(x, y);
            ++(in ? n_in : n_out);
        }
    }
    inside /= n_in;
    outside /= n_out;
    CHECK(inside >= 3.0 * outside);
}

TEST_CASE("output bounds and dims for random inputs") {
    Rng rng(31);
    for (int trial = 0; trial < 4; ++trial) {
        const int w = 40 + rng.uniform_int(80);
        const int h = 40 + rng.uniform_int(80);
        RasterImage img(w, h, 3);
        for (auto& v : img.values) v = rng.uniform();
        const auto map = spectral_residual(img);
        CHECK(map.width == w);
        CHECK(map.height == h);
        double lo = 1e9, hi = -1e9;
        for (double v : map.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            CHECK(std::isfinite(v));
        }
        CHECK(lo >= 0.0);
        CHECK(hi <= 1.0);
    }
}

TEST_CASE("translation covariance: circular shift moves the peak accordingly") {
    // Asymmetric pattern so the argmax is unique: a soft square with a bright
    // corner patch.
    auto draw = [](RasterImage& im, int ox, int oy) {
        for (int y = 0; y < 9; ++y) {
            for (int x = 0; x < 9; ++x) im.at((ox + x) % 64, (oy + y) % 64) = 0.55;
        }
        for (int y = 0; y < 3; ++y) {
            for (int x = 0; x < 3; ++x) im.at((ox + x) % 64, (oy + y) % 64) = 1.0;
        }
    };
    RasterImage img(64, 64, 1, 0.1);
    draw(img, 20, 24);
    RasterImage shifted(64, 64, 1, 0.1);
    const int dx = 8, dy = 5;
    draw(shifted, 20 + dx, 24 + dy);

    const auto m1 = spectral_residual(img);
    const auto m2 = spectral_residual(shifted);
    const auto [x1, y1] = argmax(m1);
    const auto [x2, y2] = argmax(m2);
    CHECK(std::abs((x2 - x1) - dx) <= 2);
    CHECK(std::abs((y2 - y1) - dy) <= 2);

    // Away from the borders the whole map shifts with the input.
    double max_diff = 0.0;
    for (int y = 12; y < 52; ++y) {
        for (int x = 12; x < 52; ++x) {
            max_diff = std::max(max_diff, std::abs(m2.at(x, y) - m1.at(x - dx, y - dy)));
        }
    }
    CHECK(max_diff <= 0.02);
}

TEST_CASE("intensity shift changes the normalized map by at most 1e-6") {
    Rng rng(32);
    RasterImage img(64, 80, 1);
    for (auto& v : img.values) v = rng.uniform(0.0, 0.6);
    RasterImage shifted = img;
    for (auto& v : shifted.values) v += 0.3;
    const auto m1 = spectral_residual(img);
    const auto m2 = spectral_residual(shifted);
    double max_diff = 0.0;
    for (size_t i = 0; i < m1.values.size(); ++i) {
        max_diff = std::max(max_diff, std::abs(m1.values[i] - m2.values[i]));
    }
    CHECK(max_diff <= 1e-6);
}

TEST_CASE("rejects tiny images and bad working widths") {
    CHECK_THROWS_AS(spectral_residual(constant_image(7, 20, 0.5)), InvalidInputError);
    CHECK_THROWS_AS(spectral_residual(constant_image(20, 7, 0.5)), InvalidInputError);
    SaliencyConfig cfg;
    cfg.working_width = 16;
    CHECK_THROWS_AS(spectral_residual(constant_image(64, 64, 0.5), cfg), InvalidInputError);
    cfg.working_width = 300;
    CHECK_THROWS_AS(spectral_residual(constant_image(64, 64, 0.5), cfg), InvalidInputError);
}

}  // TEST_SUITE
