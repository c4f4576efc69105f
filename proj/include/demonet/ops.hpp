#pragma once

#include <cstddef>

#include "demonet/tensor.hpp"

// Differentiable layer operations. Every function records a backward node on
// `g` when any input requires a gradient. Feature maps are N x C x H x W.

namespace demonet::ad {

enum class PadMode {
    zero,
    /// Mirror including the edge sample: x[-1] = x[0], x[n] = x[n-1].
    symmetric,
};

/// Maps an out-of-range index onto [0, n) by symmetric reflection.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);

/// Dense convolution, weight (Cout, Cin, k, k), bias (Cout) or undefined.
/// Padding is (k - 1) / 2 on every side.
Tensor conv2d(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              PadMode pad);

/// Depthwise convolution with symmetric padding, weight (C, 1, k, k), k odd.
Tensor sdw_conv(Graph& g, const Tensor& x, const Tensor& weight, std::size_t stride);

/// 1x1 grouped convolution, weight (Cout, Cin / groups, 1, 1).
Tensor pointwise_group_conv(Graph& g, const Tensor& x, const Tensor& weight, std::size_t groups);

/// Output channel j * groups + k takes input channel k * (C / groups) + j.
Tensor channel_shuffle(Graph& g, const Tensor& x, std::size_t groups);

struct RunningStats {
    Tensor mean;  // (C)
    Tensor var;   // (C)
};

struct BatchNormOptions {
    double eps = 1e-5;
    double momentum = 0.1;
    /// Train mode only; frozen networks keep their statistics.
    bool update_running = true;
};

/// Per-channel normalisation over N x H x W (or N for rank-2 input).
Tensor batch_norm(Graph& g, const Tensor& x, const Tensor& scale, const Tensor& shift, RunningStats& stats,
                  Mode mode, const BatchNormOptions& opts = {});

Tensor relu(Graph& g, const Tensor& x);
Tensor sigmoid(Graph& g, const Tensor& x);

/// Bin i covers [floor(i * H / out_h), floor((i + 1) * H / out_h)).
Tensor adaptive_avg_pool(Graph& g, const Tensor& x, std::size_t out_h, std::size_t out_w);

/// 3x3 mean with stride 2 over a symmetrically padded input.
Tensor avg_pool3x3_s2(Graph& g, const Tensor& x);

/// x flattened per batch item to (N, in); weight (out, in); bias (out). Result (N, out).
Tensor fully_connected(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor upsample_nearest(Graph& g, const Tensor& x, std::size_t factor);

Tensor concat_channels(Graph& g, const Tensor& a, const Tensor& b);
Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor sum(Graph& g, const Tensor& x);

/// Symmetric padding on the bottom and right edges.
Tensor pad_symmetric(Graph& g, const Tensor& x, std::size_t bottom, std::size_t right);
/// Keeps the top-left h x w window.
Tensor crop(Graph& g, const Tensor& x, std::size_t h, std::size_t w);

/// sum((x - target)^2) / divisor. `target` is treated as a constant.
Tensor squared_error(Graph& g, const Tensor& x, const Tensor& target, double divisor);

/// Inverse of the scattering model before clipping:
///   J = (I - (1 - T) * A) / max(T, t_floor)
/// observed (N, 3, H, W), transmission (N, 1, H, W), light (N, 3).
/// The clamp passes gradient to T only where T > t_floor.
Tensor invert_scattering(Graph& g, const Tensor& observed, const Tensor& transmission, const Tensor& light,
                         double t_floor);

}  // namespace demonet::ad
