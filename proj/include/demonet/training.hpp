#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "demonet/atmolight.hpp"
#include "demonet/networks.hpp"
#include "demonet/optimizer.hpp"
#include "demonet/sample.hpp"

namespace demonet::train {

/// full: pretrained A-net fine-tuned at lr * ratio.
/// a1:   rule-based atmospheric light per image, no A-net.
/// a2:   A-net trained jointly from random initialisation.
/// a3:   pretrained A-net frozen.
enum class Variant { full, a1, a2, a3 };

std::string_view variant_name(Variant v);
/// Throws ConfigError for an unknown name.
Variant parse_variant(std::string_view name);

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 4;
    double lr = 1e-3;
    double finetune_ratio = 0.1;
    double t_floor = physics::kDefaultTFloor;
    std::uint64_t seed = 1;
    Variant variant = Variant::full;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    /// Side of the square training crop.
    std::size_t crop = 64;
    /// Stop after this many optimizer steps; 0 means run every epoch.
    std::size_t max_steps = 0;
    /// Evaluate PSNR/SSIM every this many epochs (the last epoch always is); 0 disables.
    std::size_t eval_every = 1;
    /// Throw NumericError as soon as any forward value is NaN/Inf.
    bool check_finite = true;
    /// Invoke the checkpoint callback every this many epochs; 0 disables.
    std::size_t checkpoint_every = 0;

    void validate() const;
    AdamConfig adam(double scale = 1.0) const { return AdamConfig{lr * scale, beta1, beta2, eps}; }
};

struct EpochRecord {
    std::size_t epoch = 0;
    double loss_a = 0.0;  // NaN when not tracked
    double loss = 0.0;    // NaN when not tracked
    double psnr = 0.0;    // NaN when not evaluated
    double ssim = 0.0;
    double seconds = 0.0;
    std::size_t steps = 0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;

    /// Columns epoch,L_A,L,psnr,ssim,seconds; NaN is written as an empty field.
    std::string csv() const;
    void write_csv(const std::string& path) const;
    /// Loss columns only, for bit-exact trajectory comparison.
    bool same_losses(const TrainReport& other) const;
};

struct LightSample {
    Image image;
    AtmosphericLight target;
};

/// Pairs each rainy image with its rule-based initial atmospheric light.
std::vector<LightSample> light_targets(std::span<const SamplePair> pairs,
                                       double threshold = atmo::kDefaultThreshold);

// ---------------------------------------------------------------- losses

/// Sum over components of (a_hat - a_tilde)^2, averaged over the batch. Inputs (N, 3).
ad::Tensor loss_a(ad::Graph& g, const ad::Tensor& a_hat, const ad::Tensor& a_tilde);
double loss_a(const AtmosphericLight& a_hat, const AtmosphericLight& a_tilde);

/// Mean squared error over every element.
ad::Tensor loss_joint(ad::Graph& g, const ad::Tensor& j_hat, const ad::Tensor& j);
double loss_joint(const Image& j_hat, const Image& j);

// -------------------------------------------------------------- training

/// Called after every epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochRecord&)>;

struct PretrainResult {
    nets::ANetWeights weights;
    TrainReport report;
};

/// Stage 1: fit the A-net to rule-based light estimates.
PretrainResult pretrain_anet(std::span<const LightSample> dataset, const TrainConfig& cfg,
                             const EpochCallback& on_epoch = {});

/// Eval-mode mean loss_a of `w` over the dataset (full images, no crop).
double evaluate_anet(std::span<const LightSample> dataset, nets::ANetWeights& w);

struct JointResult {
    /// Empty for variant a1.
    nets::ANetWeights anet;
    nets::TNetWeights tnet;
    TrainReport report;
};

using CheckpointCallback =
    std::function<void(std::size_t epoch, const nets::ANetWeights& anet, const nets::TNetWeights& tnet)>;

/// Stage 2: train the T-net through the inverse scattering model.
/// Variants full and a3 require `anet_init`; it is copied, never modified.
JointResult train_joint(std::span<const SamplePair> dataset, const std::optional<nets::ANetWeights>& anet_init,
                        const TrainConfig& cfg, std::span<const SamplePair> validation = {},
                        const EpochCallback& on_epoch = {}, const CheckpointCallback& on_checkpoint = {});

struct QualityReport {
    double psnr_input = 0.0;   // mean PSNR(I, J)
    double psnr_output = 0.0;  // mean PSNR(J_hat, J)
    double ssim_input = 0.0;
    double ssim_output = 0.0;
};

/// Eval-mode restoration quality over full images. `anet` may be empty, in
/// which case the rule-based light is used (variant a1).
QualityReport evaluate_restoration(std::span<const SamplePair> pairs, nets::ANetWeights& anet,
                                   nets::TNetWeights& tnet, double t_floor = physics::kDefaultTFloor);

}  // namespace demonet::train
