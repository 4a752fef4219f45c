#pragma once

#include <cstdint>

namespace t2p::kernels {

// Hot inner loops live here in two builds: a plain serial reference
// (namespace serial) and OpenMP front-ends that split work across output
// elements. Every output element is accumulated in the same order in both
// variants, so the parallel results are bit-identical to the serial ones at
// any thread count. bench/kernel_bench.cpp compares the two.

bool parallel_enabled();
void set_parallel(bool on);

// Conv geometry. x:[ci,hi,wi]  w:[co,ci,kh,kw]  y:[co,ho,wo]
// ho = (hi + 2*pad - kh)/stride + 1 (floor), same for wo.
struct ConvShape {
    int ci = 0, hi = 0, wi = 0;
    int co = 0, kh = 0, kw = 0;
    int stride = 1, pad = 0;
    int ho = 0, wo = 0;
};

// Computes output dims; throws ConfigError (tagged with `name`) on invalid
// geometry.
ConvShape make_conv_shape(int ci, int hi, int wi, int co, int kh, int kw, int stride, int pad,
                          const char* name = "conv2d");

namespace serial {

// y is overwritten (bias first when given, else zero).
void conv2d_forward(const ConvShape& s, const double* x, const double* w, const double* bias, double* y);
// gx accumulates; also the transposed-conv forward with gx zeroed by caller.
void conv2d_grad_input(const ConvShape& s, const double* gy, const double* w, double* gx);
// gw/gb accumulate; gb may be null.
void conv2d_grad_weights(const ConvShape& s, const double* x, const double* gy, double* gw, double* gb);

// y[m] = a[m,n]*x[n] (+ bias); overwritten.
void matvec(const double* a, const double* x, const double* bias, double* y, int m, int n);
// ga += gy*x^T, gx += a^T*gy, gb += gy; any of ga/gx/gb may be null.
void matvec_grad(const double* a, const double* x, const double* gy, double* ga, double* gx, double* gb,
                 int m, int n);

// scores[r] = dot(mat[r,:], q) over float32 rows, accumulated in double.
void batch_dot_f32(const float* mat, int rows, int dim, const double* q, double* scores);

// For each point: index of the nearest center (ties -> lowest index) and the
// squared distance.
void nearest_center(const double* pts, int n, int dim, const double* centers, int m, int* assign,
                    double* dist2);

// score[i] = (lambda + sum of sal over pixels of box i) / pixel_count[i].
// Boxes are given as pixel rectangles [x0,x1) x [y0,y1).
void score_boxes(const double* sal, int w, int h, const int* boxes_px, int n, double lambda,
                 const int* pixel_count, double* score);

}  // namespace serial

// Dispatching front-ends: OpenMP when parallel is enabled, otherwise the
// serial reference.
void conv2d_forward(const ConvShape& s, const double* x, const double* w, const double* bias, double* y);
void conv2d_grad_input(const ConvShape& s, const double* gy, const double* w, double* gx);
void conv2d_grad_weights(const ConvShape& s, const double* x, const double* gy, double* gw, double* gb);
void matvec(const double* a, const double* x, const double* bias, double* y, int m, int n);
void matvec_grad(const double* a, const double* x, const double* gy, double* ga, double* gx, double* gb,
                 int m, int n);
void batch_dot_f32(const float* mat, int rows, int dim, const double* q, double* scores);
void nearest_center(const double* pts, int n, int dim, const double* centers, int m, int* assign,
                    double* dist2);
void score_boxes(const double* sal, int w, int h, const int* boxes_px, int n, double lambda,
                 const int* pixel_count, double* score);

}  // namespace t2p::kernels
