#pragma once

// Central finite-difference gradient oracle.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "demonet/random.hpp"
#include "demonet/tensor.hpp"

namespace demonet::testing {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
    std::string worst;
};

struct GradCheckOptions {
    double h = 1e-6;
    /// Denominator floor, so entries whose true gradient is ~0 compare absolutely.
    double floor = 1e-6;
    /// Entries checked per tensor; 0 checks all of them.
    std::size_t samples = 0;
    /// For piecewise-smooth losses: an entry whose error exceeds `retry_above`
    /// is re-measured with the step divided by 8, up to `retries` times, in case
    /// the interval straddled a kink. The smallest error is kept.
    std::size_t retries = 0;
    double retry_above = 1e-4;
};

using LossFn = std::function<ad::Tensor(ad::Graph&)>;

inline double rel_error(double a, double n, double floor) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// `loss` must rebuild the whole computation from the current tensor values.
inline GradCheckResult gradcheck(const LossFn& loss, std::vector<std::pair<std::string, ad::Tensor>> inputs, Rng& rng,
                                 const GradCheckOptions& opt = {}) {
    for (auto& [name, t] : inputs) {
        t.set_requires_grad(true);
        if (t.has_grad()) t.drop_grad();
    }
    {
        ad::Graph g;
        ad::Tensor l = loss(g);
        ad::backward(g, l);
    }
    std::vector<std::vector<double>> analytic;
    for (auto& [name, t] : inputs) {
        const auto gr = t.grad();
        analytic.emplace_back(gr.begin(), gr.end());
    }

    auto eval = [&] {
        ad::Graph g;
        g.set_recording(false);
        return loss(g).item();
    };

    GradCheckResult res;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto& [name, t] = inputs[k];
        const std::size_t n = t.numel();
        std::vector<std::size_t> idx;
        if (opt.samples == 0 || opt.samples >= n) {
            for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
        } else {
            for (std::size_t s = 0; s < opt.samples; ++s) idx.push_back(rng.index(n));
        }
        for (std::size_t i : idx) {
            auto d = t.data();
            const double v = d[i];
            auto central = [&](double h) {
                d[i] = v + h;
                const double lp = eval();
                d[i] = v - h;
                const double lm = eval();
                d[i] = v;
                return (lp - lm) / (2 * h);
            };
            double h = opt.h;
            double num = central(h);
            for (std::size_t r = 0; r < opt.retries && rel_error(analytic[k][i], num, opt.floor) > opt.retry_above; ++r) {
                h /= 8;
                const double again = central(h);
                if (rel_error(analytic[k][i], again, opt.floor) < rel_error(analytic[k][i], num, opt.floor)) num = again;
            }
            const double err = rel_error(analytic[k][i], num, opt.floor);
            ++res.checked;
            if (err > res.max_rel_err || std::isnan(err)) {
                res.max_rel_err = std::isnan(err) ? INFINITY : err;
                res.worst = name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic[k][i]) +
                            " numeric " + std::to_string(num);
            }
        }
    }
    return res;
}

inline ad::Tensor random_tensor(ad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    ad::Tensor t(shape);
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

/// Values bounded away from zero by `gap`, for ReLU kinks.
inline ad::Tensor random_away_from_zero(ad::Shape shape, Rng& rng, double gap = 1e-2) {
    ad::Tensor t(shape);
    for (double& v : t.data()) {
        const double m = rng.uniform(gap, 1.0);
        v = rng.uniform() < 0.5 ? -m : m;
    }
    return t;
}

}  // namespace demonet::testing
