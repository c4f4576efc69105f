#include "demonet/optimizer.hpp"

#include <cmath>
#include <string>

#include "demonet/error.hpp"

namespace demonet {

void AdamConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("adam: learning rate must be finite and >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("adam: betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("adam: eps must be positive");
}

void optimizer_step(std::vector<ad::Tensor>& params, AdamState& state, const AdamConfig& hyper) {
    if (state.m.empty() && state.step == 0) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].numel(), 0.0);
            state.v[i].assign(params[i].numel(), 0.0);
        }
    }
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw ShapeError("adam: state holds " + std::to_string(state.m.size()) + " tensors, got " +
                         std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i)
        if (state.m[i].size() != params[i].numel() || state.v[i].size() != params[i].numel())
            throw ShapeError("adam: state size mismatch for tensor " + std::to_string(i));

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(hyper.beta1, t);
    const double c2 = 1.0 - std::pow(hyper.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i].data();
        auto& m = state.m[i];
        auto& v = state.v[i];
        const bool has = params[i].has_grad();
        const auto gr = has ? params[i].grad() : std::span<double>{};
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double g = has ? gr[j] : 0.0;
            m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * g;
            v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * g * g;
            p[j] -= hyper.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + hyper.eps);
        }
    }
}

Adam::Adam(std::vector<ad::Tensor> params, AdamConfig hyper) : params_(std::move(params)), hyper_(hyper) {
    hyper_.validate();
}

void Adam::zero_grad() {
    for (auto& p : params_)
        if (p.has_grad()) p.zero_grad();
}

}  // namespace demonet
