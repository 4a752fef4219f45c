#pragma once

#include <array>
#include <vector>

#include "t2p/layout_model.hpp"

namespace t2p {

// Hand-crafted per-poster layout statistics feeding the Fréchet metric:
// [0] mean center x   [1] std center x   [2] mean center y  [3] std center y
// [4] mean box area   [5] std box area   [6] mean pairwise IoU
// [7] coverage (union area)              [8..11] min margins L,T,R,B
constexpr int kLayoutFeatureDim = 12;
using LayoutFeatureVector = std::array<double, kLayoutFeatureDim>;

LayoutFeatureVector layout_features(const Layout& layout);

std::vector<LayoutFeatureVector> layout_features_batch(const std::vector<Layout>& layouts);

// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2(Sa Sb)^{1/2}) under Gaussian fits with
// eps*I regularization (eps = 1e-6); the matrix square root comes from the
// eigendecomposition of the symmetrized product. Each set needs at least
// dim+2 samples.
double frechet_distance(const std::vector<LayoutFeatureVector>& a,
                        const std::vector<LayoutFeatureVector>& b);

}  // namespace t2p
