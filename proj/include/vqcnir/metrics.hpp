#pragma once

#include "vqcnir/image.hpp"

namespace vqcnir {

/// Reported for identical images and used as the upper cap.
inline constexpr double kPsnrCap = 99.0;

/// 10*log10(1/MSE) over all channels of [0,1] images, capped at kPsnrCap.
double psnr(const ImageRGB& a, const ImageRGB& b);

/// Single-scale SSIM on Rec.601 luma: 11x11 Gaussian window (sigma 1.5),
/// k1 = 0.01, k2 = 0.03, averaged over valid window positions.
double ssim(const ImageRGB& a, const ImageRGB& b);

} // namespace vqcnir
