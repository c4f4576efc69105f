#include "demonet/darkchannel.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>

#include "demonet/error.hpp"

namespace demonet::dcp {
namespace {

// Separable running minimum with windows truncated at the border; the min over
// a rectangle equals the min over rows of per-row minima, so this is exact.
GrayMap min_filter(const GrayMap& src, std::size_t r) {
    const std::size_t h = src.height(), w = src.width();
    GrayMap tmp(h, w), out(h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t x0 = x >= r ? x - r : 0, x1 = std::min(w - 1, x + r);
            double m = src.at(y, x0);
            for (std::size_t xx = x0 + 1; xx <= x1; ++xx) m = std::min(m, src.at(y, xx));
            tmp.at(y, x) = m;
        }
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t y0 = y >= r ? y - r : 0, y1 = std::min(h - 1, y + r);
        for (std::size_t x = 0; x < w; ++x) {
            double m = tmp.at(y0, x);
            for (std::size_t yy = y0 + 1; yy <= y1; ++yy) m = std::min(m, tmp.at(yy, x));
            out.at(y, x) = m;
        }
    }
    return out;
}

GrayMap channel_min(const Image& img, const AtmosphericLight* normalise) {
    GrayMap m(img.height(), img.width());
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x) {
            double v = img.at(y, x, 0) / (normalise ? (*normalise)[0] : 1.0);
            for (std::size_t c = 1; c < 3; ++c) v = std::min(v, img.at(y, x, c) / (normalise ? (*normalise)[c] : 1.0));
            m.at(y, x) = v;
        }
    return m;
}

}  // namespace

PatchSpec::PatchSpec(std::size_t side) : side_(side) {
    if (side == 0 || side % 2 == 0) throw ConfigError("patch side must be odd and positive, got " + std::to_string(side));
}

GrayMap dark_channel(const Image& img, PatchSpec patch) {
    return min_filter(channel_min(img, nullptr), patch.radius());
}

TransmissionMap estimate_transmission(const Image& img, const AtmosphericLight& a, PatchSpec patch, double omega,
                                      double t_floor) {
    for (std::size_t c = 0; c < 3; ++c)
        if (!(a[c] > 0.0)) throw ConfigError("estimate_transmission: atmospheric light component must be positive");
    if (!(omega > 0.0 && omega <= 1.0)) throw ConfigError("estimate_transmission: omega must be in (0, 1]");
    if (!(t_floor > 0.0 && t_floor < 1.0)) throw ConfigError("estimate_transmission: t_floor must be in (0, 1)");
    const GrayMap dark = min_filter(channel_min(img, &a), patch.radius());
    TransmissionMap t(img.height(), img.width());
    for (std::size_t i = 0; i < t.size(); ++i)
        t.values()[i] = std::clamp(1.0 - omega * dark.values()[i], t_floor, 1.0);
    return t;
}

AtmosphericLight estimate_atmospheric_light(const Image& img, PatchSpec patch) {
    const std::size_t n = img.pixels();
    if (n == 0) throw ShapeError("estimate_atmospheric_light: empty image");
    auto brightness = [&](std::size_t i) {
        const auto s = img.samples();
        return s[i * 3] + s[i * 3 + 1] + s[i * 3 + 2];
    };

    std::vector<std::size_t> candidates(n);
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    const std::size_t top = n / 1000;
    if (top > 0) {
        // Every pixel at or above the top-k dark value, ties included.
        const GrayMap dark = dark_channel(img, patch);
        std::vector<double> sorted(dark.values().begin(), dark.values().end());
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(top - 1), sorted.end(),
                         std::greater<>());
        const double cut = sorted[top - 1];
        std::erase_if(candidates, [&](std::size_t i) { return dark.values()[i] < cut; });
    }
    std::size_t best = candidates.front();
    for (std::size_t i : candidates)
        if (brightness(i) > brightness(best) || (brightness(i) == brightness(best) && i < best)) best = i;
    const auto s = img.samples();
    return AtmosphericLight{{s[best * 3], s[best * 3 + 1], s[best * 3 + 2]}};
}

DehazeResult dehaze(const Image& img, PatchSpec patch, double omega, double t_floor) {
    DehazeResult r;
    r.dark = dark_channel(img, patch);
    r.light = estimate_atmospheric_light(img, patch);
    for (std::size_t c = 0; c < 3; ++c) r.light[c] = std::max(r.light[c], 1e-6);
    r.transmission = estimate_transmission(img, r.light, patch, omega, t_floor);
    r.radiance = physics::recover(img, r.transmission, r.light, t_floor);
    return r;
}

std::vector<std::size_t> histogram(const GrayMap& map, std::size_t bins) {
    if (bins == 0) throw ConfigError("histogram: bins must be positive");
    std::vector<std::size_t> counts(bins, 0);
    for (double v : map.values()) {
        const double c = std::clamp(v, 0.0, 1.0);
        counts[std::min(bins - 1, static_cast<std::size_t>(c * static_cast<double>(bins)))]++;
    }
    return counts;
}

}  // namespace demonet::dcp
