#pragma once

#include <cstddef>
#include <vector>

#include "demonet/image.hpp"
#include "demonet/physics.hpp"

// Dark channel prior baseline for haze removal.

namespace demonet::dcp {

/// Side length of the square local patch; odd and >= 1.
class PatchSpec {
public:
    explicit PatchSpec(std::size_t side = 15);
    std::size_t side() const { return side_; }
    std::size_t radius() const { return side_ / 2; }

private:
    std::size_t side_;
};

/// min over channels and over the patch around each pixel. Patches are
/// truncated at the image border.
GrayMap dark_channel(const Image& img, PatchSpec patch);

/// T = 1 - omega * dark_channel(I / A), clamped to [t_floor, 1].
TransmissionMap estimate_transmission(const Image& img, const AtmosphericLight& a, PatchSpec patch,
                                      double omega = 1.0, double t_floor = physics::kDefaultTFloor);

/// Among the brightest 0.1% of dark-channel pixels, the colour of the one with
/// the largest channel sum. Images under 1000 pixels use the brightest pixel.
AtmosphericLight estimate_atmospheric_light(const Image& img, PatchSpec patch);

struct DehazeResult {
    Image radiance;
    TransmissionMap transmission;
    AtmosphericLight light;
    GrayMap dark;
};

DehazeResult dehaze(const Image& img, PatchSpec patch, double omega = 1.0, double t_floor = physics::kDefaultTFloor);

/// Counts of dark-channel values in `bins` equal-width bins over [0, 1].
std::vector<std::size_t> histogram(const GrayMap& map, std::size_t bins = 256);

}  // namespace demonet::dcp
