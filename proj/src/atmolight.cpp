#include "demonet/atmolight.hpp"

#include <algorithm>
#include <array>

#include "demonet/error.hpp"
#include "demonet/ops.hpp"

namespace demonet::atmo {

GrayMap luminance(const Image& img) {
    GrayMap lum(img.height(), img.width());
    const auto s = img.samples();
    for (std::size_t i = 0; i < lum.size(); ++i) lum.values()[i] = (s[i * 3] + s[i * 3 + 1] + s[i * 3 + 2]) / 3.0;
    return lum;
}

GrayMap median5(const GrayMap& src) {
    const std::size_t h = src.height(), w = src.width();
    GrayMap out(h, w);
    std::array<double, 25> window{};
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            std::size_t k = 0;
            for (std::ptrdiff_t dy = -2; dy <= 2; ++dy)
                for (std::ptrdiff_t dx = -2; dx <= 2; ++dx)
                    window[k++] = src.at(ad::reflect_index(static_cast<std::ptrdiff_t>(y) + dy, h),
                                         ad::reflect_index(static_cast<std::ptrdiff_t>(x) + dx, w));
            std::nth_element(window.begin(), window.begin() + 12, window.end());
            out.at(y, x) = window[12];
        }
    return out;
}

RainMask rain_location_map(const Image& img, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("rain_location_map: threshold must be in (0, 1)");
    const GrayMap lum = luminance(img);
    const GrayMap med = median5(lum);
    RainMask mask(img.height(), img.width());
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask.values()[i] = std::max(0.0, lum.values()[i] - med.values()[i]) > threshold ? 1 : 0;
    return mask;
}

InitialLight init_atmospheric_light(const Image& img, const RainMask& mask) {
    if (mask.height() != img.height() || mask.width() != img.width())
        throw ShapeError("init_atmospheric_light: mask and image sizes differ");
    if (img.pixels() == 0) throw ShapeError("init_atmospheric_light: empty image");
    const auto s = img.samples();
    auto brightness = [&](std::size_t i) { return s[i * 3] + s[i * 3 + 1] + s[i * 3 + 2]; };

    const bool any = std::any_of(mask.values().begin(), mask.values().end(), [](std::uint8_t m) { return m != 0; });
    std::size_t best = img.pixels();
    for (std::size_t i = 0; i < img.pixels(); ++i) {
        if (any && !mask.values()[i]) continue;
        if (best == img.pixels() || brightness(i) > brightness(best)) best = i;
    }
    InitialLight r;
    r.light = AtmosphericLight{{s[best * 3], s[best * 3 + 1], s[best * 3 + 2]}};
    for (double& v : r.light.rgb) v = std::clamp(v, 0.0, 1.0);
    r.fallback = !any;
    return r;
}

InitialLight estimate(const Image& img, double threshold) {
    return init_atmospheric_light(img, rain_location_map(img, threshold));
}

}  // namespace demonet::atmo
