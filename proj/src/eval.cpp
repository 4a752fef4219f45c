#include "t2p/eval.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "t2p/smooth_region.hpp"

namespace t2p {

namespace {

// Exact union area of axis-aligned boxes by inclusion-exclusion (fine for
// poster-sized layouts); falls back to a grid estimate for large sets.
double union_area(const std::vector<TextBox>& boxes) {
    const size_t n = boxes.size();
    if (n <= 16) {
        double acc = 0.0;
        for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
            double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
            int bits = 0;
            for (size_t i = 0; i < n; ++i) {
                if (!(mask & (1u << i))) continue;
                ++bits;
                x0 = std::max(x0, boxes[i].x);
                y0 = std::max(y0, boxes[i].y);
                x1 = std::min(x1, boxes[i].x + boxes[i].width);
                y1 = std::min(y1, boxes[i].y + boxes[i].height);
            }
            const double area = std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0);
            acc += (bits % 2 == 1) ? area : -area;
        }
        return acc;
    }
    const int g = 512;
    int covered = 0;
    for (int y = 0; y < g; ++y) {
        const double cy = (y + 0.5) / g;
        for (int x = 0; x < g; ++x) {
            const double cx = (x + 0.5) / g;
            for (const auto& b : boxes) {
                if (cx >= b.x && cx < b.x + b.width && cy >= b.y && cy < b.y + b.height) {
                    ++covered;
                    break;
                }
            }
        }
    }
    return static_cast<double>(covered) / (static_cast<double>(g) * g);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return {mean, std::sqrt(std::max(0.0, var))};
}

}  // namespace

LayoutFeatureVector layout_features(const Layout& layout) {
    const auto& boxes = layout.boxes;
    if (boxes.empty()) throw InvalidInputError("layout_features: empty layout");
    const size_t n = boxes.size();

    std::vector<double> cx, cy, area;
    cx.reserve(n);
    cy.reserve(n);
    area.reserve(n);
    for (const auto& b : boxes) {
        cx.push_back(b.x + b.width / 2.0);
        cy.push_back(b.y + b.height / 2.0);
        area.push_back(b.width * b.height);
    }
    const auto [mcx, scx] = mean_std(cx);
    const auto [mcy, scy] = mean_std(cy);
    const auto [ma, sa] = mean_std(area);

    double iou = 0.0;
    if (n > 1) {
        int pairs = 0;
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = i + 1; j < n; ++j) {
                AnchorRegion ra{boxes[i].x, boxes[i].y, boxes[i].x + boxes[i].width,
                                boxes[i].y + boxes[i].height, 0, 0.0};
                AnchorRegion rb{boxes[j].x, boxes[j].y, boxes[j].x + boxes[j].width,
                                boxes[j].y + boxes[j].height, 0, 0.0};
                iou += box_iou(ra, rb);
                ++pairs;
            }
        }
        iou /= pairs;
    }

    double ml = 1.0, mt = 1.0, mr = 1.0, mb = 1.0;
    for (const auto& b : boxes) {
        ml = std::min(ml, b.x);
        mt = std::min(mt, b.y);
        mr = std::min(mr, 1.0 - (b.x + b.width));
        mb = std::min(mb, 1.0 - (b.y + b.height));
    }

    LayoutFeatureVector f{mcx, scx, mcy, scy, ma, sa, iou, union_area(boxes), ml, mt, mr, mb};
    for (double v : f) {
        if (!std::isfinite(v)) throw StateError("layout_features: non-finite feature");
    }
    return f;
}

std::vector<LayoutFeatureVector> layout_features_batch(const std::vector<Layout>& layouts) {
    std::vector<LayoutFeatureVector> out(layouts.size());
#pragma omp parallel for schedule(static) if (layouts.size() > 64)
    for (long i = 0; i < static_cast<long>(layouts.size()); ++i) {
        out[static_cast<size_t>(i)] = layout_features(layouts[static_cast<size_t>(i)]);
    }
    return out;
}

double frechet_distance(const std::vector<LayoutFeatureVector>& a,
                        const std::vector<LayoutFeatureVector>& b) {
    constexpr size_t min_n = kLayoutFeatureDim + 2;
    if (a.size() < min_n || b.size() < min_n) {
        throw InvalidInputError("frechet_distance: each set needs at least dim+2 samples");
    }
    auto fit = [](const std::vector<LayoutFeatureVector>& set, Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) {
        constexpr int dim = kLayoutFeatureDim;
        const auto n = static_cast<Eigen::Index>(set.size());
        Eigen::MatrixXd m(n, dim);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int j = 0; j < dim; ++j) m(i, j) = set[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
        mu = m.colwise().mean();
        const Eigen::MatrixXd centered = m.rowwise() - mu.transpose();
        sigma = centered.transpose() * centered / static_cast<double>(n - 1);
        sigma += 1e-6 * Eigen::MatrixXd::Identity(dim, dim);
    };
    Eigen::VectorXd mu_a, mu_b;
    Eigen::MatrixXd sig_a, sig_b;
    fit(a, mu_a, sig_a);
    fit(b, mu_b, sig_b);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_a(sig_a);
    Eigen::VectorXd ev = es_a.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd root_a = es_a.eigenvectors() * ev.asDiagonal() * es_a.eigenvectors().transpose();

    Eigen::MatrixXd prod = root_a * sig_b * root_a;
    prod = (prod + prod.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_p(prod);
    const double tr_sqrt = es_p.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    const double dist =
        (mu_a - mu_b).squaredNorm() + sig_a.trace() + sig_b.trace() - 2.0 * tr_sqrt;
    return std::max(0.0, dist);
}

}  // namespace t2p
