#pragma once

#include "demonet/image.hpp"

// Atmospheric scattering degradation model:
//   I(x) = T(x) J(x) + (1 - T(x)) A,   T(x) = exp(-tau(x))

namespace demonet::physics {

inline constexpr double kDefaultTFloor = 0.1;

/// Degrades a clean image; output clipped to [0, 1].
Image synthesize(const Image& clean, const TransmissionMap& t, const AtmosphericLight& a);

/// Same blend without the final clip.
Image synthesize_unclipped(const Image& clean, const TransmissionMap& t, const AtmosphericLight& a);

/// T = exp(-tau). Throws ConfigError on negative depth.
TransmissionMap transmission_from_depth(const OpticalDepthMap& tau);

/// J = (I - (1 - T) A) / max(T, t_floor), clipped to [0, 1].
Image recover(const Image& observed, const TransmissionMap& t, const AtmosphericLight& a,
              double t_floor = kDefaultTFloor);

/// The recovery before clipping; values may leave [0, 1].
Image recover_unclipped(const Image& observed, const TransmissionMap& t, const AtmosphericLight& a,
                        double t_floor = kDefaultTFloor);

}  // namespace demonet::physics
