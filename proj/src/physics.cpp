#include "demonet/physics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "demonet/error.hpp"

namespace demonet::physics {
namespace {

void require_match(const Image& img, const TransmissionMap& t, const char* op) {
    if (img.height() != t.height() || img.width() != t.width())
        throw ShapeError(std::string(op) + ": image " + std::to_string(img.height()) + "x" +
                         std::to_string(img.width()) + " vs transmission " + std::to_string(t.height()) + "x" +
                         std::to_string(t.width()));
}

}  // namespace

Image synthesize_unclipped(const Image& clean, const TransmissionMap& t, const AtmosphericLight& a) {
    require_match(clean, t, "synthesize");
    Image out(clean.height(), clean.width());
    auto src = clean.samples();
    auto dst = out.samples();
    auto tv = t.values();
    for (std::size_t i = 0; i < clean.pixels(); ++i)
        for (std::size_t c = 0; c < 3; ++c) dst[i * 3 + c] = tv[i] * src[i * 3 + c] + (1.0 - tv[i]) * a[c];
    return out;
}

Image synthesize(const Image& clean, const TransmissionMap& t, const AtmosphericLight& a) {
    Image out = synthesize_unclipped(clean, t, a);
    out.clip01();
    return out;
}

TransmissionMap transmission_from_depth(const OpticalDepthMap& tau) {
    TransmissionMap t(tau.height(), tau.width());
    auto src = tau.values();
    auto dst = t.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (!(src[i] >= 0.0)) throw ConfigError("transmission_from_depth: optical depth must be non-negative");
        dst[i] = std::exp(-src[i]);
    }
    return t;
}

Image recover_unclipped(const Image& observed, const TransmissionMap& t, const AtmosphericLight& a, double t_floor) {
    require_match(observed, t, "recover");
    if (!(t_floor > 0.0 && t_floor < 1.0)) throw ConfigError("recover: t_floor must lie in (0, 1)");
    Image out(observed.height(), observed.width());
    auto src = observed.samples();
    auto dst = out.samples();
    auto tv = t.values();
    for (std::size_t i = 0; i < observed.pixels(); ++i) {
        const double d = std::max(tv[i], t_floor);
        for (std::size_t c = 0; c < 3; ++c) dst[i * 3 + c] = (src[i * 3 + c] - (1.0 - tv[i]) * a[c]) / d;
    }
    return out;
}

Image recover(const Image& observed, const TransmissionMap& t, const AtmosphericLight& a, double t_floor) {
    Image out = recover_unclipped(observed, t, a, t_floor);
    out.clip01();
    return out;
}

}  // namespace demonet::physics
