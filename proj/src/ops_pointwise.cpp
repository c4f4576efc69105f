#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "demonet/error.hpp"
#include "demonet/ops.hpp"
#include "demonet/simd/kernels.hpp"

namespace demonet::ad {
namespace {

// Splits a (N, C, ...) tensor into N x C planes of `inner` elements.
struct ChannelLayout {
    std::size_t batch, channels, inner;
    explicit ChannelLayout(const Tensor& x) {
        const Shape& s = x.shape();
        if (s.rank() < 2) throw ShapeError("batch_norm: expected at least (N, C)");
        batch = s[0];
        channels = s[1];
        inner = 1;
        for (std::size_t i = 2; i < s.rank(); ++i) inner *= s[i];
    }
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!(a.shape() == b.shape()))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

double stable_sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

}  // namespace

Tensor batch_norm(Graph& g, const Tensor& x, const Tensor& scale, const Tensor& shift, RunningStats& stats,
                  Mode mode, const BatchNormOptions& opts) {
    const ChannelLayout L(x);
    const std::size_t c = L.channels;
    if (scale.numel() != c || shift.numel() != c || stats.mean.numel() != c || stats.var.numel() != c)
        throw ShapeError("batch_norm: parameter length != channel count " + std::to_string(c));
    if (!(opts.eps > 0.0)) throw ConfigError("batch_norm: epsilon must be positive");
    const std::size_t count = L.batch * L.inner;
    if (count == 0) throw ShapeError("batch_norm: zero-size batch");

    auto mean = std::make_shared<std::vector<double>>(c);
    auto inv_std = std::make_shared<std::vector<double>>(c);
    const double* xd = x.data().data();
    if (mode == Mode::train) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            double s = 0.0;
            for (std::size_t b = 0; b < L.batch; ++b) {
                const double* p = xd + (b * c + ch) * L.inner;
                for (std::size_t i = 0; i < L.inner; ++i) s += p[i];
            }
            const double mu = s / static_cast<double>(count);
            double v = 0.0;
            for (std::size_t b = 0; b < L.batch; ++b) {
                const double* p = xd + (b * c + ch) * L.inner;
                for (std::size_t i = 0; i < L.inner; ++i) v += (p[i] - mu) * (p[i] - mu);
            }
            const double var = v / static_cast<double>(count);
            (*mean)[ch] = mu;
            (*inv_std)[ch] = 1.0 / std::sqrt(var + opts.eps);
            if (opts.update_running) {
                const double unbiased = count > 1 ? v / static_cast<double>(count - 1) : var;
                stats.mean.data()[ch] = (1.0 - opts.momentum) * stats.mean.data()[ch] + opts.momentum * mu;
                stats.var.data()[ch] = (1.0 - opts.momentum) * stats.var.data()[ch] + opts.momentum * unbiased;
            }
        }
    } else {
        for (std::size_t ch = 0; ch < c; ++ch) {
            (*mean)[ch] = stats.mean.data()[ch];
            (*inv_std)[ch] = 1.0 / std::sqrt(stats.var.data()[ch] + opts.eps);
        }
    }

    Tensor y(x.shape());
    double* yd = y.data().data();
    for (std::size_t b = 0; b < L.batch; ++b)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double a = scale.data()[ch] * (*inv_std)[ch];
            const double off = shift.data()[ch] - a * (*mean)[ch];
            const double* p = xd + (b * c + ch) * L.inner;
            double* q = yd + (b * c + ch) * L.inner;
            for (std::size_t i = 0; i < L.inner; ++i) q[i] = a * p[i] + off;
        }
    g.verify(y, "batch_norm");

    if (g.tracks({&x, &scale, &shift})) {
        g.record("batch_norm", y, [x, scale, shift, y, mean, inv_std, mode]() mutable {
            const ChannelLayout L(x);
            const std::size_t c = L.channels;
            const auto count = static_cast<double>(L.batch * L.inner);
            const double* xd = x.data().data();
            const double* gy = y.grad().data();
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double mu = (*mean)[ch], is = (*inv_std)[ch];
                double sum_gy = 0.0, sum_gy_xhat = 0.0;
                for (std::size_t b = 0; b < L.batch; ++b) {
                    const std::size_t off = (b * c + ch) * L.inner;
                    for (std::size_t i = 0; i < L.inner; ++i) {
                        sum_gy += gy[off + i];
                        sum_gy_xhat += gy[off + i] * (xd[off + i] - mu) * is;
                    }
                }
                if (scale.requires_grad()) scale.grad()[ch] += sum_gy_xhat;
                if (shift.requires_grad()) shift.grad()[ch] += sum_gy;
                if (!x.requires_grad()) continue;
                double* gx = x.grad().data();
                const double gamma = scale.data()[ch];
                for (std::size_t b = 0; b < L.batch; ++b) {
                    const std::size_t off = (b * c + ch) * L.inner;
                    for (std::size_t i = 0; i < L.inner; ++i) {
                        if (mode == Mode::train) {
                            const double xhat = (xd[off + i] - mu) * is;
                            gx[off + i] += gamma * is * (gy[off + i] - sum_gy / count - xhat * sum_gy_xhat / count);
                        } else {
                            gx[off + i] += gamma * is * gy[off + i];
                        }
                    }
                }
            }
        });
    }
    return y;
}

Tensor relu(Graph& g, const Tensor& x) {
    Tensor y(x.shape());
    simd::kernels().relu_forward(x.numel(), x.data().data(), y.data().data());
    g.verify(y, "relu");
    if (g.tracks({&x})) {
        g.record("relu", y, [x, y]() mutable {
            simd::kernels().relu_backward(x.numel(), x.data().data(), y.grad().data(), x.grad().data());
        });
    }
    return y;
}

Tensor sigmoid(Graph& g, const Tensor& x) {
    Tensor y(x.shape());
    std::transform(x.data().begin(), x.data().end(), y.data().begin(), stable_sigmoid);
    g.verify(y, "sigmoid");
    if (g.tracks({&x})) {
        g.record("sigmoid", y, [x, y]() mutable {
            const auto s = y.data();
            const auto gy = y.grad();
            auto gx = x.grad();
            for (std::size_t i = 0; i < s.size(); ++i) gx[i] += gy[i] * s[i] * (1.0 - s[i]);
        });
    }
    return y;
}

Tensor fully_connected(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (x.shape().rank() < 1 || weight.shape().rank() != 2)
        throw ShapeError("fully_connected: weight must be (out, in)");
    const std::size_t n = x.dim(0), in = x.numel() / std::max<std::size_t>(n, 1), out = weight.dim(0);
    if (weight.dim(1) != in)
        throw ShapeError("fully_connected: input has " + std::to_string(in) + " features, weight expects " +
                         std::to_string(weight.dim(1)));
    if (bias.defined() && bias.numel() != out) throw ShapeError("fully_connected: bias length != outputs");

    const auto& kern = simd::kernels();
    Tensor y(Shape{n, out});
    if (bias.defined())
        for (std::size_t b = 0; b < n; ++b) std::copy(bias.data().begin(), bias.data().end(), y.data().begin() + b * out);
    kern.gemm_dot(n, out, in, x.data().data(), in, weight.data().data(), in, y.data().data(), out);
    g.verify(y, "fully_connected");

    if (g.tracks({&x, &weight, &bias})) {
        g.record("fully_connected", y, [x, weight, bias, y, n, in, out]() mutable {
            const auto& kern = simd::kernels();
            const double* gy = y.grad().data();
            if (bias.requires_grad())
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t o = 0; o < out; ++o) bias.grad()[o] += gy[b * out + o];
            if (weight.requires_grad())
                kern.gemm_bcast(out, in, n, gy, 1, out, x.data().data(), in, weight.grad().data(), in);
            if (x.requires_grad())
                kern.gemm_bcast(n, in, out, gy, out, 1, weight.data().data(), in, x.grad().data(), in);
        });
    }
    return y;
}

Tensor concat_channels(Graph& g, const Tensor& a, const Tensor& b) {
    if (a.shape().rank() != 4 || b.shape().rank() != 4 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) ||
        a.dim(3) != b.dim(3))
        throw ShapeError("concat_channels: batch/spatial mismatch " + a.shape().str() + " vs " + b.shape().str());
    const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
    Tensor y(Shape{n, ca + cb, a.dim(2), a.dim(3)});
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(a.data().data() + i * ca * hw, ca * hw, y.data().data() + i * (ca + cb) * hw);
        std::copy_n(b.data().data() + i * cb * hw, cb * hw, y.data().data() + (i * (ca + cb) + ca) * hw);
    }
    if (g.tracks({&a, &b})) {
        g.record("concat_channels", y, [a, b, y, n, ca, cb, hw]() mutable {
            const double* gy = y.grad().data();
            for (std::size_t i = 0; i < n; ++i) {
                const double* src = gy + i * (ca + cb) * hw;
                if (a.requires_grad()) {
                    double* ga = a.grad().data() + i * ca * hw;
                    for (std::size_t j = 0; j < ca * hw; ++j) ga[j] += src[j];
                }
                if (b.requires_grad()) {
                    double* gb = b.grad().data() + i * cb * hw;
                    for (std::size_t j = 0; j < cb * hw; ++j) gb[j] += src[ca * hw + j];
                }
            }
        });
    }
    return y;
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor y(a.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) y.data()[i] = a.data()[i] + b.data()[i];
    g.verify(y, "add");
    if (g.tracks({&a, &b})) {
        g.record("add", y, [a, b, y]() mutable {
            const auto& kern = simd::kernels();
            if (a.requires_grad()) kern.axpy(y.numel(), 1.0, y.grad().data(), a.grad().data());
            if (b.requires_grad()) kern.axpy(y.numel(), 1.0, y.grad().data(), b.grad().data());
        });
    }
    return y;
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor y(a.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) y.data()[i] = a.data()[i] * b.data()[i];
    g.verify(y, "mul");
    if (g.tracks({&a, &b})) {
        g.record("mul", y, [a, b, y]() mutable {
            const auto gy = y.grad();
            // a and b may alias (x * x); read data before accumulating.
            if (a.requires_grad()) {
                auto ga = a.grad();
                for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * b.data()[i];
            }
            if (b.requires_grad()) {
                auto gb = b.grad();
                for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * a.data()[i];
            }
        });
    }
    return y;
}

Tensor sum(Graph& g, const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    Tensor y = Tensor::scalar(s);
    g.verify(y, "sum");
    if (g.tracks({&x})) {
        g.record("sum", y, [x, y]() mutable {
            const double gy = y.grad()[0];
            for (double& v : x.grad()) v += gy;
        });
    }
    return y;
}

Tensor squared_error(Graph& g, const Tensor& x, const Tensor& target, double divisor) {
    if (x.numel() != target.numel())
        throw ShapeError("squared_error: shape mismatch " + x.shape().str() + " vs " + target.shape().str());
    if (!(divisor > 0.0)) throw ConfigError("squared_error: divisor must be positive");
    double s = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double d = x.data()[i] - target.data()[i];
        s += d * d;
    }
    Tensor y = Tensor::scalar(s / divisor);
    g.verify(y, "squared_error");
    if (g.tracks({&x})) {
        g.record("squared_error", y, [x, target, y, divisor]() mutable {
            const double k = 2.0 * y.grad()[0] / divisor;
            auto gx = x.grad();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += k * (x.data()[i] - target.data()[i]);
        });
    }
    return y;
}

Tensor invert_scattering(Graph& g, const Tensor& observed, const Tensor& transmission, const Tensor& light,
                         double t_floor) {
    if (observed.shape().rank() != 4 || observed.dim(1) != 3)
        throw ShapeError("invert_scattering: observed must be (N, 3, H, W)");
    const std::size_t n = observed.dim(0), h = observed.dim(2), w = observed.dim(3), hw = h * w;
    if (!(transmission.shape() == Shape{n, 1, h, w}))
        throw ShapeError("invert_scattering: transmission " + transmission.shape().str() + " does not match image");
    if (!(light.shape() == Shape{n, 3})) throw ShapeError("invert_scattering: light must be (N, 3)");
    if (!(t_floor > 0.0 && t_floor < 1.0)) throw ConfigError("invert_scattering: t_floor must be in (0, 1)");

    Tensor y(observed.shape());
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < 3; ++c) {
            const double a = light.data()[b * 3 + c];
            const double* ip = observed.data().data() + (b * 3 + c) * hw;
            const double* tp = transmission.data().data() + b * hw;
            double* jp = y.data().data() + (b * 3 + c) * hw;
            for (std::size_t i = 0; i < hw; ++i) jp[i] = (ip[i] - (1.0 - tp[i]) * a) / std::max(tp[i], t_floor);
        }
    g.verify(y, "invert_scattering");

    if (g.tracks({&observed, &transmission, &light})) {
        g.record("invert_scattering", y, [observed, transmission, light, y, t_floor, n, hw]() mutable {
            const double* gy = y.grad().data();
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t c = 0; c < 3; ++c) {
                    const double a = light.data()[b * 3 + c];
                    const std::size_t off = (b * 3 + c) * hw;
                    const double* tp = transmission.data().data() + b * hw;
                    const double* ip = observed.data().data() + off;
                    double ga = 0.0;
                    for (std::size_t i = 0; i < hw; ++i) {
                        const double t = tp[i];
                        const double d = std::max(t, t_floor);
                        const double num = ip[i] - (1.0 - t) * a;
                        const double gyi = gy[off + i];
                        if (transmission.requires_grad()) {
                            double dt = a / d;
                            if (t > t_floor) dt -= num / (d * d);
                            transmission.grad()[b * hw + i] += gyi * dt;
                        }
                        if (observed.requires_grad()) observed.grad()[off + i] += gyi / d;
                        ga += gyi * (t - 1.0) / d;
                    }
                    if (light.requires_grad()) light.grad()[b * 3 + c] += ga;
                }
        });
    }
    return y;
}

}  // namespace demonet::ad
