#pragma once

#include <optional>

#include "demonet/image.hpp"

namespace demonet {

/// Rainy observation and its clean counterpart. Ground truth is present only
/// for pairs produced by the synthesizer.
struct SamplePair {
    Image rainy;
    Image clean;
    std::optional<TransmissionMap> transmission;
    std::optional<AtmosphericLight> light;
};

}  // namespace demonet
