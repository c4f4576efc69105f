#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "demonet/image.hpp"
#include "demonet/ops.hpp"
#include "demonet/physics.hpp"
#include "demonet/weights.hpp"

// The atmospheric-light network (A-net), the transmission network (T-net)
// built from revised ShuffleNet units, and their composition through the
// inverse scattering model.

namespace demonet::nets {

using ad::Mode;

/// Options shared by every forward pass.
struct ForwardOptions {
    Mode mode = Mode::eval;
    /// Batch-norm running statistics are updated only when true and mode == train.
    bool update_running_stats = true;
    double t_floor = physics::kDefaultTFloor;
};

// ---------------------------------------------------------------- A-net

inline constexpr std::size_t kANetBaseWidth = 16;
inline constexpr std::size_t kANetStages = 5;
inline constexpr std::size_t kANetMinSide = 64;

struct ANetWeights {
    WeightSet params;

    /// Fan-in scaled random initialisation.
    static ANetWeights init(std::uint64_t seed);
    /// Throws ConfigError when a tensor is missing or mis-shaped.
    void validate() const;
};

/// N x 3 x H x W -> N x 3 atmospheric light in (0, 1).
ad::Tensor anet_forward(ad::Graph& g, const ad::Tensor& images, ANetWeights& w, const ForwardOptions& opts);
AtmosphericLight anet_forward(const Image& img, ANetWeights& w);

// ---------------------------------------------------------- ShuffleUnit

enum class Merge { add, cat };

struct ShuffleUnitConfig {
    std::size_t in_channels;
    std::size_t out_channels;
    std::size_t groups;
    Merge variant;

    std::size_t stride() const { return variant == Merge::cat ? 2 : 1; }
    /// Channels produced by the bottleneck branch before merging.
    std::size_t branch_channels() const { return variant == Merge::cat ? out_channels - in_channels : out_channels; }
    /// Width inside the bottleneck: a quarter of the branch output.
    std::size_t mid_channels() const { return branch_channels() / 4; }
    void validate() const;
};

/// Adds the unit's tensors to `params` under `prefix`.
void init_shuffle_unit(WeightSet& params, std::string_view prefix, const ShuffleUnitConfig& cfg, std::uint64_t seed);

ad::Tensor shuffle_unit_forward(ad::Graph& g, const ad::Tensor& x, const ShuffleUnitConfig& cfg, WeightSet& params,
                                std::string_view prefix, const ForwardOptions& opts);

// ---------------------------------------------------------------- T-net

inline constexpr std::size_t kTNetStemWidth = 24;
inline constexpr std::size_t kTNetAddUnits = 6;
inline constexpr std::size_t kTNetDownsample = 4;

/// Unit layout of the T-net in evaluation order.
std::vector<ShuffleUnitConfig> tnet_units();

struct TNetWeights {
    WeightSet params;

    static TNetWeights init(std::uint64_t seed);
    void validate() const;
};

/// N x 3 x H x W -> N x 1 x H x W transmission. Inputs whose sides are not
/// multiples of 4 are reflected up to the next multiple and cropped back.
/// Eval mode clamps the result to [t_floor, 1].
ad::Tensor tnet_forward(ad::Graph& g, const ad::Tensor& images, TNetWeights& w, const ForwardOptions& opts);
TransmissionMap tnet_forward(const Image& img, TNetWeights& w, double t_floor = physics::kDefaultTFloor);

// ------------------------------------------------------------ composite

struct DemoOutput {
    Image radiance;            // clipped to [0, 1]
    Image radiance_unclipped;
    AtmosphericLight light;
    TransmissionMap transmission;
};

/// Eval-mode composite: A from the A-net, T from the T-net, then inversion.
DemoOutput demo_forward(const Image& img, ANetWeights& wa, TNetWeights& wt,
                        double t_floor = physics::kDefaultTFloor);

/// Same, with a fixed atmospheric light in place of the A-net.
DemoOutput demo_forward(const Image& img, const AtmosphericLight& light, TNetWeights& wt,
                        double t_floor = physics::kDefaultTFloor);

/// Prefixes used when both networks share one weight file.
inline constexpr std::string_view kANetPrefix = "anet.";
inline constexpr std::string_view kTNetPrefix = "tnet.";

}  // namespace demonet::nets
