#pragma once

#include "demonet/image.hpp"

// Initial atmospheric light for rainy images: locate rain pixels by a
// thresholded high-frequency luminance residual, then take the brightest one.

namespace demonet::atmo {

inline constexpr double kDefaultThreshold = 0.12;

/// (R + G + B) / 3 per pixel.
GrayMap luminance(const Image& img);

/// 5x5 median with symmetric border reflection.
GrayMap median5(const GrayMap& src);

/// 1 where max(0, lum - median5(lum)) > threshold. threshold in (0, 1).
RainMask rain_location_map(const Image& img, double threshold = kDefaultThreshold);

struct InitialLight {
    AtmosphericLight light;
    /// Set when the mask was empty and the globally brightest pixel was used.
    bool fallback = false;
};

/// Colour of the masked pixel with the largest channel sum (lowest index on ties).
InitialLight init_atmospheric_light(const Image& img, const RainMask& mask);

/// rain_location_map followed by init_atmospheric_light.
InitialLight estimate(const Image& img, double threshold = kDefaultThreshold);

}  // namespace demonet::atmo
