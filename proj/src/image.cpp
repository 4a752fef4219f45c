#include "t2p/image.hpp"

#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "cv_bridge.hpp"

namespace t2p {

namespace {

cv::Mat to_mat8(const RasterImage& img) {
    cv::Mat m(img.height, img.width, img.channels == 3 ? CV_8UC3 : CV_8UC1);
    for (int y = 0; y < img.height; ++y) {
        auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width; ++x) {
            if (img.channels == 3) {
                // RasterImage is RGB, cv::Mat is BGR.
                row[x * 3 + 0] = static_cast<std::uint8_t>(std::lround(std::clamp(img.at(x, y, 2), 0.0, 1.0) * 255.0));
                row[x * 3 + 1] = static_cast<std::uint8_t>(std::lround(std::clamp(img.at(x, y, 1), 0.0, 1.0) * 255.0));
                row[x * 3 + 2] = static_cast<std::uint8_t>(std::lround(std::clamp(img.at(x, y, 0), 0.0, 1.0) * 255.0));
            } else {
                row[x] = static_cast<std::uint8_t>(std::lround(std::clamp(img.at(x, y), 0.0, 1.0) * 255.0));
            }
        }
    }
    return m;
}

RasterImage from_mat8(const cv::Mat& m) {
    RasterImage img(m.cols, m.rows, m.channels() == 3 ? 3 : 1);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            if (img.channels == 3) {
                img.at(x, y, 0) = row[x * 3 + 2] / 255.0;
                img.at(x, y, 1) = row[x * 3 + 1] / 255.0;
                img.at(x, y, 2) = row[x * 3 + 0] / 255.0;
            } else {
                img.at(x, y) = row[x] / 255.0;
            }
        }
    }
    return img;
}

}  // namespace

bool RasterImage::valid() const {
    if (width < 1 || height < 1 || (channels != 1 && channels != 3)) return false;
    if (values.size() != static_cast<size_t>(width) * height * channels) return false;
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) return false;
    }
    return true;
}

void RasterImage::clamp01() {
    for (auto& v : values) v = std::clamp(v, 0.0, 1.0);
}

void RasterImage::quantize8() {
    for (auto& v : values) v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

RasterImage load_image(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) {
        if (!std::filesystem::exists(path)) {
            throw MissingResourceError("image not found: " + path.string());
        }
        throw LoadError("cannot decode image: " + path.string());
    }
    if (m.channels() == 4) {
        cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
    }
    if (m.depth() != CV_8U) {
        cv::Mat tmp;
        m.convertTo(tmp, CV_8U, 255.0 / 65535.0);
        m = tmp;
    }
    return from_mat8(m);
}

void save_png(const std::filesystem::path& path, const RasterImage& img) {
    if (img.width < 1 || img.height < 1) throw InvalidInputError("save_png: empty image");
    if (!cv::imwrite(path.string(), to_mat8(img))) {
        throw Error("save_png: cannot write " + path.string());
    }
}

RasterImage resize(const RasterImage& img, int new_w, int new_h) {
    if (new_w < 1 || new_h < 1) throw InvalidInputError("resize: bad target dims");
    cv::Mat src(img.height, img.width, img.channels == 3 ? CV_64FC3 : CV_64FC1,
                const_cast<double*>(img.values.data()));
    cv::Mat dst;
    const int interp = (new_w < img.width || new_h < img.height) ? cv::INTER_AREA : cv::INTER_LINEAR;
    cv::resize(src, dst, cv::Size(new_w, new_h), 0.0, 0.0, interp);
    RasterImage out(new_w, new_h, img.channels);
    for (int y = 0; y < new_h; ++y) {
        const double* row = dst.ptr<double>(y);
        for (int x = 0; x < new_w * img.channels; ++x) {
            out.values[(static_cast<size_t>(y) * new_w) * img.channels + x] = std::clamp(row[x], 0.0, 1.0);
        }
    }
    return out;
}

RasterImage to_grayscale(const RasterImage& img) {
    if (img.channels == 1) return img;
    RasterImage out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            out.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
        }
    }
    return out;
}

namespace detail {

cv::Mat image_to_mat8(const RasterImage& img) { return to_mat8(img); }
RasterImage image_from_mat8(const cv::Mat& m) { return from_mat8(m); }

}  // namespace detail

}  // namespace t2p
