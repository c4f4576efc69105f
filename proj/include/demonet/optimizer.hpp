#pragma once

#include <cstddef>
#include <vector>

#include "demonet/tensor.hpp"

namespace demonet {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

/// First and second moment estimates, one buffer per parameter tensor.
struct AdamState {
    std::vector<std::vector<double>> m, v;
    std::size_t step = 0;
};

/// One bias-corrected Adam update of every tensor in `params` using its
/// gradient buffer; a tensor without a gradient buffer sees a zero gradient.
/// The state is sized on first use and must keep matching afterwards.
void optimizer_step(std::vector<ad::Tensor>& params, AdamState& state, const AdamConfig& hyper);

class Adam {
public:
    Adam(std::vector<ad::Tensor> params, AdamConfig hyper);

    void step() { optimizer_step(params_, state_, hyper_); }
    void zero_grad();

    const AdamState& state() const { return state_; }
    const AdamConfig& config() const { return hyper_; }

private:
    std::vector<ad::Tensor> params_;
    AdamState state_;
    AdamConfig hyper_;
};

}  // namespace demonet
