#pragma once

#include <opencv2/core.hpp>

#include "t2p/image.hpp"

namespace t2p::detail {

// 8-bit BGR/graystage bridging between RasterImage (RGB, [0,1]) and cv::Mat.
cv::Mat image_to_mat8(const RasterImage& img);
RasterImage image_from_mat8(const cv::Mat& m);

}  // namespace t2p::detail
