#include "t2p/saliency.hpp"

#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

namespace t2p {

SaliencyMap spectral_residual(const RasterImage& image, const SaliencyConfig& cfg) {
    if (image.width < 8 || image.height < 8 || !image.valid()) {
        throw InvalidInputError("spectral_residual: image must be valid and at least 8x8");
    }
    if (cfg.working_width < 32 || cfg.working_width > 256) {
        throw InvalidInputError("spectral_residual: working_width out of [32,256]");
    }

    const int ww = cfg.working_width;
    const int wh = std::max(8, static_cast<int>(std::lround(
                                   static_cast<double>(image.height) * ww / image.width)));
    RasterImage gray = resize(to_grayscale(image), ww, wh);

    cv::Mat plane(wh, ww, CV_64FC1, gray.values.data());
    cv::Mat freq;
    cv::dft(plane, freq, cv::DFT_COMPLEX_OUTPUT);

    cv::Mat amp(wh, ww, CV_64FC1), phase(wh, ww, CV_64FC1), logamp(wh, ww, CV_64FC1);
    double amp_sum = 0.0;
    for (int y = 0; y < wh; ++y) {
        for (int x = 0; x < ww; ++x) {
            const auto c = freq.at<cv::Vec2d>(y, x);
            amp.at<double>(y, x) = std::hypot(c[0], c[1]);
            phase.at<double>(y, x) = std::atan2(c[1], c[0]);
            if (y != 0 || x != 0) amp_sum += amp.at<double>(y, x);
        }
    }
    // The log plane is floored relative to the spectrum scale: exact-zero bins
    // (common in synthetic images) would otherwise drag the box-filter mean
    // and blow up their neighbors' residuals.
    const double floor_amp = std::max(1e-12, 1e-3 * amp_sum / std::max(1, wh * ww - 1));
    for (int y = 0; y < wh; ++y) {
        for (int x = 0; x < ww; ++x) {
            logamp.at<double>(y, x) = std::log(std::max(amp.at<double>(y, x), floor_amp));
        }
    }
    // Neutral fill at DC so the residual never depends on the mean intensity.
    logamp.at<double>(0, 0) =
        (logamp.at<double>(0, 1) + logamp.at<double>(1, 0) + logamp.at<double>(1, 1)) / 3.0;

    cv::Mat smoothed;
    cv::blur(logamp, smoothed, cv::Size(cfg.box_filter, cfg.box_filter), cv::Point(-1, -1),
             cv::BORDER_REPLICATE);

    // Residual amplitude A*exp(-box(logA)); written this way so zero bins stay
    // zero instead of turning into exp(0).
    cv::Mat recon(wh, ww, CV_64FC2);
    for (int y = 0; y < wh; ++y) {
        for (int x = 0; x < ww; ++x) {
            const double a = amp.at<double>(y, x) * std::exp(-smoothed.at<double>(y, x));
            const double ph = phase.at<double>(y, x);
            recon.at<cv::Vec2d>(y, x) = {a * std::cos(ph), a * std::sin(ph)};
        }
    }
    recon.at<cv::Vec2d>(0, 0) = {0.0, 0.0};

    cv::Mat spatial;
    cv::idft(recon, spatial, cv::DFT_SCALE | cv::DFT_COMPLEX_OUTPUT);
    cv::Mat sal(wh, ww, CV_64FC1);
    for (int y = 0; y < wh; ++y) {
        for (int x = 0; x < ww; ++x) {
            const auto c = spatial.at<cv::Vec2d>(y, x);
            sal.at<double>(y, x) = c[0] * c[0] + c[1] * c[1];
        }
    }

    const double sigma = ww / cfg.sigma_divisor;
    const int ksize = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
    cv::GaussianBlur(sal, sal, cv::Size(ksize, ksize), sigma, sigma, cv::BORDER_REPLICATE);

    double lo = 0.0, hi = 0.0;
    cv::minMaxLoc(sal, &lo, &hi);
    SaliencyMap small(ww, wh);
    if (hi - lo >= 1e-9) {
        for (int y = 0; y < wh; ++y) {
            for (int x = 0; x < ww; ++x) {
                small.at(x, y) = (sal.at<double>(y, x) - lo) / (hi - lo);
            }
        }
    }
    return resize_map(small, image.width, image.height);
}

}  // namespace t2p
