#include "demonet/metrics.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "demonet/error.hpp"

namespace demonet::metrics {
namespace {

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void require_same_size(const Image& a, const Image& b) {
    if (a.height() != b.height() || a.width() != b.width()) throw ShapeError("metrics: image sizes differ");
}

std::array<double, kWindow> gaussian_taps() {
    std::array<double, kWindow> taps{};
    double total = 0.0;
    for (std::size_t i = 0; i < kWindow; ++i) {
        const double d = static_cast<double>(i) - static_cast<double>(kWindow / 2);
        taps[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        total += taps[i];
    }
    for (double& t : taps) t /= total;
    return taps;
}

// 'valid' separable Gaussian filter of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::array<double, kWindow>& taps) {
    const std::size_t oh = h - kWindow + 1, ow = w - kWindow + 1;
    std::vector<double> rows(h * ow), out(oh * ow);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t k = 0; k < kWindow; ++k) s += taps[k] * src[y * w + x + k];
            rows[y * ow + x] = s;
        }
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t k = 0; k < kWindow; ++k) s += taps[k] * rows[(y + k) * ow + x];
            out[y * ow + x] = s;
        }
    return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
    require_same_size(a, b);
    const auto sa = a.samples(), sb = b.samples();
    if (sa.empty()) throw ShapeError("psnr: empty images");
    double se = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const double d = sa[i] - sb[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(sa.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
    require_same_size(a, b);
    const std::size_t h = a.height(), w = a.width();
    if (h < kWindow || w < kWindow) throw ShapeError("ssim: image smaller than the 11x11 window");
    const auto taps = gaussian_taps();
    const std::size_t n = h * w;

    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = a.samples()[i * 3 + c];
            y[i] = b.samples()[i * 3 + c];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, h, w, taps), my = filter_valid(y, h, w, taps);
        const auto exx = filter_valid(xx, h, w, taps), eyy = filter_valid(yy, h, w, taps);
        const auto exy = filter_valid(xy, h, w, taps);
        double s = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = exx[i] - mx[i] * mx[i];
            const double vy = eyy[i] - my[i] * my[i];
            const double cxy = exy[i] - mx[i] * my[i];
            s += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
        }
        total += s / static_cast<double>(mx.size());
    }
    return total / 3.0;
}

MetricReport evaluate(const Image& estimate, const Image& reference) {
    return MetricReport{psnr(estimate, reference), ssim(estimate, reference)};
}

}  // namespace demonet::metrics
