#include "t2p/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <string>

#include "t2p/errors.hpp"

namespace t2p::kernels {

namespace {
std::atomic<bool> g_parallel{true};

// Single output element of a convolution; the one accumulation order shared
// by the serial reference and the OpenMP variant.
inline double conv_out_at(const ConvShape& s, const double* x, const double* w, int co, int oy, int ox) {
    const int iy0 = oy * s.stride - s.pad;
    const int ix0 = ox * s.stride - s.pad;
    const int ky_lo = std::max(0, -iy0), ky_hi = std::min(s.kh, s.hi - iy0);
    const int kx_lo = std::max(0, -ix0), kx_hi = std::min(s.kw, s.wi - ix0);
    double acc = 0.0;
    for (int ci = 0; ci < s.ci; ++ci) {
        const double* xp = x + static_cast<size_t>(ci) * s.hi * s.wi;
        const double* wp = w + (static_cast<size_t>(co) * s.ci + ci) * s.kh * s.kw;
        for (int ky = ky_lo; ky < ky_hi; ++ky) {
            const double* xrow = xp + static_cast<size_t>(iy0 + ky) * s.wi + ix0;
            const double* wrow = wp + static_cast<size_t>(ky) * s.kw;
            for (int kx = kx_lo; kx < kx_hi; ++kx) acc += xrow[kx] * wrow[kx];
        }
    }
    return acc;
}

// Valid kernel offsets for one input coordinate: k in [lo,hi], k ≡ (i+pad)
// mod stride, with the matching output index in range.
struct TapRange {
    int lo = 0, hi = -1;  // inclusive, step = stride
};

inline TapRange tap_range(int i, int pad, int k, int stride, int out_extent) {
    TapRange r;
    const int target = i + pad;
    const int rem = target % stride;
    int lo = rem;
    const int min_k = target - (out_extent - 1) * stride;  // keeps out index < out_extent
    if (lo < min_k) lo += ((min_k - lo + stride - 1) / stride) * stride;
    int hi = std::min(k - 1, target);  // keeps out index >= 0
    r.lo = lo;
    r.hi = hi;
    return r;
}

// Gather form of the input gradient: one input element at a time.
inline double conv_gx_at(const ConvShape& s, const double* gy, const double* w, int ci, int iy, int ix) {
    const TapRange ry = tap_range(iy, s.pad, s.kh, s.stride, s.ho);
    const TapRange rx = tap_range(ix, s.pad, s.kw, s.stride, s.wo);
    double acc = 0.0;
    for (int co = 0; co < s.co; ++co) {
        const double* gp = gy + static_cast<size_t>(co) * s.ho * s.wo;
        const double* wp = w + (static_cast<size_t>(co) * s.ci + ci) * s.kh * s.kw;
        for (int ky = ry.lo; ky <= ry.hi; ky += s.stride) {
            const int oy = (iy + s.pad - ky) / s.stride;
            const double* grow = gp + static_cast<size_t>(oy) * s.wo;
            const double* wrow = wp + static_cast<size_t>(ky) * s.kw;
            for (int kx = rx.lo; kx <= rx.hi; kx += s.stride) {
                acc += grow[(ix + s.pad - kx) / s.stride] * wrow[kx];
            }
        }
    }
    return acc;
}

// One weight cell: correlate gy against the matching x window.
inline double conv_gw_at(const ConvShape& s, const double* x, const double* gy, int co, int ci, int ky,
                         int kx) {
    const double* xp = x + static_cast<size_t>(ci) * s.hi * s.wi;
    const double* gp = gy + static_cast<size_t>(co) * s.ho * s.wo;
    const int oy_lo = ky < s.pad ? (s.pad - ky + s.stride - 1) / s.stride : 0;
    const int oy_hi = std::min(s.ho - 1, (s.hi - 1 - ky + s.pad) / s.stride);
    const int ox_lo = kx < s.pad ? (s.pad - kx + s.stride - 1) / s.stride : 0;
    const int ox_hi = std::min(s.wo - 1, (s.wi - 1 - kx + s.pad) / s.stride);
    double acc = 0.0;
    for (int oy = oy_lo; oy <= oy_hi; ++oy) {
        const int iy = oy * s.stride + ky - s.pad;
        const double* grow = gp + static_cast<size_t>(oy) * s.wo;
        const double* xrow = xp + static_cast<size_t>(iy) * s.wi + (static_cast<size_t>(ox_lo) * s.stride + kx - s.pad);
        for (int ox = ox_lo; ox <= ox_hi; ++ox) {
            acc += grow[ox] * xrow[static_cast<size_t>(ox - ox_lo) * s.stride];
        }
    }
    return acc;
}

inline double score_box_at(const double* sal, int w, const int* b, double lambda, int pixel_count) {
    double acc = 0.0;
    for (int y = b[1]; y < b[3]; ++y) {
        const double* row = sal + static_cast<size_t>(y) * w;
        for (int x = b[0]; x < b[2]; ++x) acc += row[x];
    }
    return (lambda + acc) / static_cast<double>(pixel_count);
}

inline void nearest_center_at(const double* pt, int dim, const double* centers, int m, int* assign,
                              double* dist2) {
    int best = 0;
    double best_d = 0.0;
    for (int c = 0; c < m; ++c) {
        const double* cp = centers + static_cast<size_t>(c) * dim;
        double d = 0.0;
        for (int j = 0; j < dim; ++j) {
            const double diff = pt[j] - cp[j];
            d += diff * diff;
        }
        if (c == 0 || d < best_d) {
            best = c;
            best_d = d;
        }
    }
    *assign = best;
    *dist2 = best_d;
}

}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

ConvShape make_conv_shape(int ci, int hi, int wi, int co, int kh, int kw, int stride, int pad,
                          const char* name) {
    ConvShape s{ci, hi, wi, co, kh, kw, stride, pad, 0, 0};
    if (ci < 1 || hi < 1 || wi < 1 || co < 1 || kh < 1 || kw < 1 || stride < 1 || pad < 0) {
        throw ConfigError(std::string(name) + ": invalid convolution geometry");
    }
    s.ho = (hi + 2 * pad - kh) / stride + 1;
    s.wo = (wi + 2 * pad - kw) / stride + 1;
    if (hi + 2 * pad < kh || wi + 2 * pad < kw || s.ho < 1 || s.wo < 1) {
        throw ConfigError(std::string(name) + ": kernel larger than padded input");
    }
    return s;
}

namespace serial {

void conv2d_forward(const ConvShape& s, const double* x, const double* w, const double* bias, double* y) {
    for (int co = 0; co < s.co; ++co) {
        const double b = bias ? bias[co] : 0.0;
        double* yp = y + static_cast<size_t>(co) * s.ho * s.wo;
        for (int oy = 0; oy < s.ho; ++oy) {
            for (int ox = 0; ox < s.wo; ++ox) {
                yp[static_cast<size_t>(oy) * s.wo + ox] = b + conv_out_at(s, x, w, co, oy, ox);
            }
        }
    }
}

void conv2d_grad_input(const ConvShape& s, const double* gy, const double* w, double* gx) {
    for (int ci = 0; ci < s.ci; ++ci) {
        double* gp = gx + static_cast<size_t>(ci) * s.hi * s.wi;
        for (int iy = 0; iy < s.hi; ++iy) {
            for (int ix = 0; ix < s.wi; ++ix) {
                gp[static_cast<size_t>(iy) * s.wi + ix] += conv_gx_at(s, gy, w, ci, iy, ix);
            }
        }
    }
}

void conv2d_grad_weights(const ConvShape& s, const double* x, const double* gy, double* gw, double* gb) {
    const int wsz = s.ci * s.kh * s.kw;
    for (int co = 0; co < s.co; ++co) {
        for (int ci = 0; ci < s.ci; ++ci) {
            for (int ky = 0; ky < s.kh; ++ky) {
                for (int kx = 0; kx < s.kw; ++kx) {
                    gw[static_cast<size_t>(co) * wsz + (static_cast<size_t>(ci) * s.kh + ky) * s.kw + kx] +=
                        conv_gw_at(s, x, gy, co, ci, ky, kx);
                }
            }
        }
    }
    if (gb) {
        for (int co = 0; co < s.co; ++co) {
            const double* gp = gy + static_cast<size_t>(co) * s.ho * s.wo;
            double acc = 0.0;
            for (int i = 0; i < s.ho * s.wo; ++i) acc += gp[i];
            gb[co] += acc;
        }
    }
}

void matvec(const double* a, const double* x, const double* bias, double* y, int m, int n) {
    for (int i = 0; i < m; ++i) {
        const double* row = a + static_cast<size_t>(i) * n;
        double acc = bias ? bias[i] : 0.0;
        for (int j = 0; j < n; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

void matvec_grad(const double* a, const double* x, const double* gy, double* ga, double* gx, double* gb,
                 int m, int n) {
    if (ga) {
        for (int i = 0; i < m; ++i) {
            double* row = ga + static_cast<size_t>(i) * n;
            const double g = gy[i];
            for (int j = 0; j < n; ++j) row[j] += g * x[j];
        }
    }
    if (gx) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += a[static_cast<size_t>(i) * n + j] * gy[i];
            gx[j] += acc;
        }
    }
    if (gb) {
        for (int i = 0; i < m; ++i) gb[i] += gy[i];
    }
}

void batch_dot_f32(const float* mat, int rows, int dim, const double* q, double* scores) {
    for (int r = 0; r < rows; ++r) {
        const float* row = mat + static_cast<size_t>(r) * dim;
        double acc = 0.0;
        for (int j = 0; j < dim; ++j) acc += static_cast<double>(row[j]) * q[j];
        scores[r] = acc;
    }
}

void nearest_center(const double* pts, int n, int dim, const double* centers, int m, int* assign,
                    double* dist2) {
    for (int i = 0; i < n; ++i) {
        nearest_center_at(pts + static_cast<size_t>(i) * dim, dim, centers, m, &assign[i], &dist2[i]);
    }
}

void score_boxes(const double* sal, int w, int h, const int* boxes_px, int n, double lambda,
                 const int* pixel_count, double* score) {
    (void)h;
    for (int i = 0; i < n; ++i) {
        score[i] = score_box_at(sal, w, boxes_px + static_cast<size_t>(i) * 4, lambda, pixel_count[i]);
    }
}

}  // namespace serial

void conv2d_forward(const ConvShape& s, const double* x, const double* w, const double* bias, double* y) {
    if (!parallel_enabled()) return serial::conv2d_forward(s, x, w, bias, y);
    const int total = s.co * s.ho * s.wo;
#pragma omp parallel for schedule(static) if (total > 512)
    for (int idx = 0; idx < total; ++idx) {
        const int co = idx / (s.ho * s.wo);
        const int rem = idx % (s.ho * s.wo);
        const int oy = rem / s.wo, ox = rem % s.wo;
        y[idx] = (bias ? bias[co] : 0.0) + conv_out_at(s, x, w, co, oy, ox);
    }
}

void conv2d_grad_input(const ConvShape& s, const double* gy, const double* w, double* gx) {
    if (!parallel_enabled()) return serial::conv2d_grad_input(s, gy, w, gx);
    const int total = s.ci * s.hi * s.wi;
#pragma omp parallel for schedule(static) if (total > 512)
    for (int idx = 0; idx < total; ++idx) {
        const int ci = idx / (s.hi * s.wi);
        const int rem = idx % (s.hi * s.wi);
        gx[idx] += conv_gx_at(s, gy, w, ci, rem / s.wi, rem % s.wi);
    }
}

void conv2d_grad_weights(const ConvShape& s, const double* x, const double* gy, double* gw, double* gb) {
    if (!parallel_enabled()) return serial::conv2d_grad_weights(s, x, gy, gw, gb);
    const int wsz = s.ci * s.kh * s.kw;
    const int total = s.co * wsz;
#pragma omp parallel for schedule(static) if (total > 128)
    for (int idx = 0; idx < total; ++idx) {
        const int co = idx / wsz;
        const int rem = idx % wsz;
        const int ci = rem / (s.kh * s.kw);
        const int krem = rem % (s.kh * s.kw);
        gw[idx] += conv_gw_at(s, x, gy, co, ci, krem / s.kw, krem % s.kw);
    }
    if (gb) {
        for (int co = 0; co < s.co; ++co) {
            const double* gp = gy + static_cast<size_t>(co) * s.ho * s.wo;
            double acc = 0.0;
            for (int i = 0; i < s.ho * s.wo; ++i) acc += gp[i];
            gb[co] += acc;
        }
    }
}

void matvec(const double* a, const double* x, const double* bias, double* y, int m, int n) {
    if (!parallel_enabled() || m < 64) return serial::matvec(a, x, bias, y, m, n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* row = a + static_cast<size_t>(i) * n;
        double acc = bias ? bias[i] : 0.0;
        for (int j = 0; j < n; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

void matvec_grad(const double* a, const double* x, const double* gy, double* ga, double* gx, double* gb,
                 int m, int n) {
    if (!parallel_enabled() || static_cast<long long>(m) * n < 16384) {
        return serial::matvec_grad(a, x, gy, ga, gx, gb, m, n);
    }
    if (ga) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < m; ++i) {
            double* row = ga + static_cast<size_t>(i) * n;
            const double g = gy[i];
            for (int j = 0; j < n; ++j) row[j] += g * x[j];
        }
    }
    if (gx) {
#pragma omp parallel for schedule(static)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += a[static_cast<size_t>(i) * n + j] * gy[i];
            gx[j] += acc;
        }
    }
    if (gb) {
        for (int i = 0; i < m; ++i) gb[i] += gy[i];
    }
}

void batch_dot_f32(const float* mat, int rows, int dim, const double* q, double* scores) {
    if (!parallel_enabled() || rows < 256) return serial::batch_dot_f32(mat, rows, dim, q, scores);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        const float* row = mat + static_cast<size_t>(r) * dim;
        double acc = 0.0;
        for (int j = 0; j < dim; ++j) acc += static_cast<double>(row[j]) * q[j];
        scores[r] = acc;
    }
}

void nearest_center(const double* pts, int n, int dim, const double* centers, int m, int* assign,
                    double* dist2) {
    if (!parallel_enabled() || n < 256) return serial::nearest_center(pts, n, dim, centers, m, assign, dist2);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        nearest_center_at(pts + static_cast<size_t>(i) * dim, dim, centers, m, &assign[i], &dist2[i]);
    }
}

void score_boxes(const double* sal, int w, int h, const int* boxes_px, int n, double lambda,
                 const int* pixel_count, double* score) {
    if (!parallel_enabled() || n < 64) return serial::score_boxes(sal, w, h, boxes_px, n, lambda, pixel_count, score);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        score[i] = score_box_at(sal, w, boxes_px + static_cast<size_t>(i) * 4, lambda, pixel_count[i]);
    }
}

}  // namespace t2p::kernels
