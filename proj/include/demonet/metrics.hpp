#pragma once

#include "demonet/image.hpp"

namespace demonet::metrics {

/// Reported in place of +inf for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) with unit dynamic range, capped at kPsnrCap.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over 11x11 Gaussian windows (sigma 1.5, valid positions only),
/// computed per RGB channel and averaged. Both sides must be >= 11 pixels.
double ssim(const Image& a, const Image& b);

struct MetricReport {
    double psnr;
    double ssim;
};

MetricReport evaluate(const Image& estimate, const Image& reference);

}  // namespace demonet::metrics
