#include <algorithm>
#include <string>
#include <vector>

#include "demonet/error.hpp"
#include "demonet/ops.hpp"
#include "demonet/simd/kernels.hpp"

namespace demonet::ad {
namespace {

void require_rank4(const Tensor& x, const char* op) {
    if (!x.defined() || x.shape().rank() != 4)
        throw ShapeError(std::string(op) + ": expected N x C x H x W input");
}

// For every kernel tap t and output coordinate o, the source coordinate
// o * stride - pad + t, reflected or marked -1 (zero padding).
std::vector<std::ptrdiff_t> tap_map(std::size_t k, std::size_t out, std::size_t in, std::size_t stride,
                                    std::size_t pad, PadMode mode) {
    std::vector<std::ptrdiff_t> map(k * out);
    for (std::size_t t = 0; t < k; ++t)
        for (std::size_t o = 0; o < out; ++o) {
            const auto src = static_cast<std::ptrdiff_t>(o * stride + t) - static_cast<std::ptrdiff_t>(pad);
            if (src >= 0 && src < static_cast<std::ptrdiff_t>(in))
                map[t * out + o] = src;
            else
                map[t * out + o] = mode == PadMode::zero ? -1 : static_cast<std::ptrdiff_t>(reflect_index(src, in));
        }
    return map;
}

struct ConvGeometry {
    std::size_t channels, height, width, k, stride, pad, out_h, out_w;
    std::vector<std::ptrdiff_t> rows, cols;

    ConvGeometry(std::size_t c, std::size_t h, std::size_t w, std::size_t k_, std::size_t s, PadMode mode)
        : channels(c), height(h), width(w), k(k_), stride(s), pad((k_ - 1) / 2) {
        if (h + 2 * pad < k || w + 2 * pad < k) throw ShapeError("convolution kernel larger than padded input");
        out_h = (h + 2 * pad - k) / s + 1;
        out_w = (w + 2 * pad - k) / s + 1;
        rows = tap_map(k, out_h, h, s, pad, mode);
        cols = tap_map(k, out_w, w, s, pad, mode);
    }

    std::size_t plane_out() const { return out_h * out_w; }
    std::size_t col_rows() const { return channels * k * k; }

    void im2col(const double* x, double* col) const {
        const std::size_t hw = plane_out();
        for (std::size_t c = 0; c < channels; ++c) {
            const double* plane = x + c * height * width;
            for (std::size_t ky = 0; ky < k; ++ky)
                for (std::size_t kx = 0; kx < k; ++kx) {
                    double* dst = col + ((c * k + ky) * k + kx) * hw;
                    for (std::size_t oy = 0; oy < out_h; ++oy) {
                        const std::ptrdiff_t iy = rows[ky * out_h + oy];
                        double* drow = dst + oy * out_w;
                        if (iy < 0) {
                            std::fill(drow, drow + out_w, 0.0);
                            continue;
                        }
                        const double* srow = plane + iy * width;
                        const std::ptrdiff_t* cmap = cols.data() + kx * out_w;
                        for (std::size_t ox = 0; ox < out_w; ++ox) {
                            const std::ptrdiff_t ix = cmap[ox];
                            drow[ox] = ix < 0 ? 0.0 : srow[ix];
                        }
                    }
                }
        }
    }

    void col2im_add(const double* col, double* dx) const {
        const std::size_t hw = plane_out();
        for (std::size_t c = 0; c < channels; ++c) {
            double* plane = dx + c * height * width;
            for (std::size_t ky = 0; ky < k; ++ky)
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const double* src = col + ((c * k + ky) * k + kx) * hw;
                    for (std::size_t oy = 0; oy < out_h; ++oy) {
                        const std::ptrdiff_t iy = rows[ky * out_h + oy];
                        if (iy < 0) continue;
                        double* drow = plane + iy * width;
                        const double* srow = src + oy * out_w;
                        const std::ptrdiff_t* cmap = cols.data() + kx * out_w;
                        for (std::size_t ox = 0; ox < out_w; ++ox)
                            if (cmap[ox] >= 0) drow[cmap[ox]] += srow[ox];
                    }
                }
        }
    }
};

}  // namespace

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    return m < static_cast<std::ptrdiff_t>(n) ? static_cast<std::size_t>(m) : static_cast<std::size_t>(period - 1 - m);
}

Tensor conv2d(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              PadMode pad) {
    require_rank4(x, "conv2d");
    require_rank4(weight, "conv2d weight");
    const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t cout = weight.dim(0), k = weight.dim(2);
    if (weight.dim(1) != cin)
        throw ShapeError("conv2d: input has " + std::to_string(cin) + " channels, weight expects " +
                         std::to_string(weight.dim(1)));
    if (weight.dim(3) != k) throw ShapeError("conv2d: kernel must be square");
    if (pad == PadMode::symmetric && k % 2 == 0) throw ShapeError("conv2d: symmetric padding needs an odd kernel");
    if (stride == 0) throw ShapeError("conv2d: stride must be positive");
    if (bias.defined() && bias.numel() != cout) throw ShapeError("conv2d: bias length != output channels");

    const auto geo = std::make_shared<ConvGeometry>(cin, h, w, k, stride, pad);
    const std::size_t hw_out = geo->plane_out(), ck = geo->col_rows();
    const bool direct = k == 1 && stride == 1;
    const auto& kern = simd::kernels();

    Tensor y(Shape{n, cout, geo->out_h, geo->out_w});
    std::vector<double> col(direct ? 0 : ck * hw_out);
    for (std::size_t b = 0; b < n; ++b) {
        const double* xb = x.data().data() + b * cin * h * w;
        double* yb = y.data().data() + b * cout * hw_out;
        if (bias.defined())
            for (std::size_t o = 0; o < cout; ++o) std::fill(yb + o * hw_out, yb + (o + 1) * hw_out, bias.data()[o]);
        const double* src = xb;
        if (!direct) {
            geo->im2col(xb, col.data());
            src = col.data();
        }
        kern.gemm_bcast(cout, hw_out, ck, weight.data().data(), ck, 1, src, hw_out, yb, hw_out);
    }
    g.verify(y, "conv2d");

    if (g.tracks({&x, &weight, &bias})) {
        g.record("conv2d", y, [x, weight, bias, y, geo, direct]() mutable {
            const auto& kern = simd::kernels();
            const std::size_t n = x.dim(0), cin = x.dim(1), plane_in = x.dim(2) * x.dim(3);
            const std::size_t cout = weight.dim(0), hw_out = geo->plane_out(), ck = geo->col_rows();
            const double* gy = y.grad().data();
            std::vector<double> col(direct ? 0 : ck * hw_out), dcol(direct ? 0 : ck * hw_out);
            for (std::size_t b = 0; b < n; ++b) {
                const double* gyb = gy + b * cout * hw_out;
                if (bias.requires_grad()) {
                    auto gb = bias.grad();
                    for (std::size_t o = 0; o < cout; ++o)
                        for (std::size_t i = 0; i < hw_out; ++i) gb[o] += gyb[o * hw_out + i];
                }
                const double* xb = x.data().data() + b * cin * plane_in;
                if (weight.requires_grad()) {
                    const double* src = xb;
                    if (!direct) {
                        geo->im2col(xb, col.data());
                        src = col.data();
                    }
                    kern.gemm_dot(cout, ck, hw_out, gyb, hw_out, src, hw_out, weight.grad().data(), ck);
                }
                if (x.requires_grad()) {
                    double* gxb = x.grad().data() + b * cin * plane_in;
                    if (direct) {
                        kern.gemm_bcast(ck, hw_out, cout, weight.data().data(), 1, ck, gyb, hw_out, gxb, hw_out);
                    } else {
                        std::fill(dcol.begin(), dcol.end(), 0.0);
                        kern.gemm_bcast(ck, hw_out, cout, weight.data().data(), 1, ck, gyb, hw_out, dcol.data(),
                                        hw_out);
                        geo->col2im_add(dcol.data(), gxb);
                    }
                }
            }
        });
    }
    return y;
}

Tensor sdw_conv(Graph& g, const Tensor& x, const Tensor& weight, std::size_t stride) {
    require_rank4(x, "sdw_conv");
    require_rank4(weight, "sdw_conv weight");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3), k = weight.dim(2);
    if (weight.dim(0) != c || weight.dim(1) != 1)
        throw ShapeError("sdw_conv: weight must be (C, 1, k, k) with C = " + std::to_string(c));
    if (weight.dim(3) != k || k % 2 == 0) throw ShapeError("sdw_conv: kernel must be square and odd");
    if (stride == 0) throw ShapeError("sdw_conv: stride must be positive");

    const auto geo = std::make_shared<ConvGeometry>(1, h, w, k, stride, PadMode::symmetric);
    const std::size_t oh = geo->out_h, ow = geo->out_w;
    Tensor y(Shape{n, c, oh, ow});
    const double* xd = x.data().data();
    const double* wd = weight.data().data();
    double* yd = y.data().data();
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* xp = xd + (b * c + ch) * h * w;
            const double* wp = wd + ch * k * k;
            double* yp = yd + (b * c + ch) * oh * ow;
            for (std::size_t ky = 0; ky < k; ++ky)
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const double wv = wp[ky * k + kx];
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        const double* srow = xp + geo->rows[ky * oh + oy] * w;
                        const std::ptrdiff_t* cmap = geo->cols.data() + kx * ow;
                        double* drow = yp + oy * ow;
                        for (std::size_t ox = 0; ox < ow; ++ox) drow[ox] += wv * srow[cmap[ox]];
                    }
                }
        }
    g.verify(y, "sdw_conv");

    if (g.tracks({&x, &weight})) {
        g.record("sdw_conv", y, [x, weight, y, geo]() mutable {
            const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3), k = weight.dim(2);
            const std::size_t oh = geo->out_h, ow = geo->out_w;
            const double* gy = y.grad().data();
            const double* xd = x.data().data();
            const double* wd = weight.data().data();
            double* gw = weight.requires_grad() ? weight.grad().data() : nullptr;
            double* gx = x.requires_grad() ? x.grad().data() : nullptr;
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t plane = (b * c + ch);
                    const double* gyp = gy + plane * oh * ow;
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const double wv = wd[ch * k * k + ky * k + kx];
                            double acc = 0.0;
                            for (std::size_t oy = 0; oy < oh; ++oy) {
                                const std::size_t row = geo->rows[ky * oh + oy] * w;
                                const std::ptrdiff_t* cmap = geo->cols.data() + kx * ow;
                                const double* grow = gyp + oy * ow;
                                for (std::size_t ox = 0; ox < ow; ++ox) {
                                    const std::size_t src = plane * h * w + row + cmap[ox];
                                    if (gw) acc += grow[ox] * xd[src];
                                    if (gx) gx[src] += grow[ox] * wv;
                                }
                            }
                            if (gw) gw[ch * k * k + ky * k + kx] += acc;
                        }
                }
        });
    }
    return y;
}

Tensor pointwise_group_conv(Graph& g, const Tensor& x, const Tensor& weight, std::size_t groups) {
    require_rank4(x, "pointwise_group_conv");
    require_rank4(weight, "pointwise_group_conv weight");
    const std::size_t n = x.dim(0), cin = x.dim(1), hw = x.dim(2) * x.dim(3), cout = weight.dim(0);
    if (groups == 0 || cin % groups != 0 || cout % groups != 0)
        throw ShapeError("pointwise_group_conv: channels " + std::to_string(cin) + "->" + std::to_string(cout) +
                         " not divisible by groups " + std::to_string(groups));
    const std::size_t cig = cin / groups, cog = cout / groups;
    if (weight.dim(1) != cig || weight.dim(2) != 1 || weight.dim(3) != 1)
        throw ShapeError("pointwise_group_conv: weight must be (Cout, Cin/groups, 1, 1)");

    const auto& kern = simd::kernels();
    Tensor y(Shape{n, cout, x.dim(2), x.dim(3)});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t gi = 0; gi < groups; ++gi) {
            const double* xg = x.data().data() + (b * cin + gi * cig) * hw;
            double* yg = y.data().data() + (b * cout + gi * cog) * hw;
            kern.gemm_bcast(cog, hw, cig, weight.data().data() + gi * cog * cig, cig, 1, xg, hw, yg, hw);
        }
    g.verify(y, "pointwise_group_conv");

    if (g.tracks({&x, &weight})) {
        g.record("pointwise_group_conv", y, [x, weight, y, groups]() mutable {
            const auto& kern = simd::kernels();
            const std::size_t n = x.dim(0), cin = x.dim(1), hw = x.dim(2) * x.dim(3), cout = weight.dim(0);
            const std::size_t cig = cin / groups, cog = cout / groups;
            const double* gy = y.grad().data();
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t gi = 0; gi < groups; ++gi) {
                    const double* gyg = gy + (b * cout + gi * cog) * hw;
                    const double* wg = weight.data().data() + gi * cog * cig;
                    if (weight.requires_grad()) {
                        const double* xg = x.data().data() + (b * cin + gi * cig) * hw;
                        kern.gemm_dot(cog, cig, hw, gyg, hw, xg, hw, weight.grad().data() + gi * cog * cig, cig);
                    }
                    if (x.requires_grad()) {
                        double* gxg = x.grad().data() + (b * cin + gi * cig) * hw;
                        kern.gemm_bcast(cig, hw, cog, wg, 1, cig, gyg, hw, gxg, hw);
                    }
                }
        });
    }
    return y;
}

Tensor channel_shuffle(Graph& g, const Tensor& x, std::size_t groups) {
    require_rank4(x, "channel_shuffle");
    const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    if (groups == 0 || c % groups != 0)
        throw ShapeError("channel_shuffle: " + std::to_string(c) + " channels not divisible by " +
                         std::to_string(groups));
    const std::size_t per = c / groups;
    // source[j] = input channel feeding output channel j
    std::vector<std::size_t> source(c);
    for (std::size_t gi = 0; gi < groups; ++gi)
        for (std::size_t j = 0; j < per; ++j) source[j * groups + gi] = gi * per + j;

    Tensor y(x.shape());
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oc = 0; oc < c; ++oc) {
            const double* src = x.data().data() + (b * c + source[oc]) * hw;
            std::copy(src, src + hw, y.data().data() + (b * c + oc) * hw);
        }

    if (g.tracks({&x})) {
        g.record("channel_shuffle", y, [x, y, source = std::move(source)]() mutable {
            const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
            const double* gy = y.grad().data();
            double* gx = x.grad().data();
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t oc = 0; oc < c; ++oc) {
                    const double* src = gy + (b * c + oc) * hw;
                    double* dst = gx + (b * c + source[oc]) * hw;
                    for (std::size_t i = 0; i < hw; ++i) dst[i] += src[i];
                }
        });
    }
    return y;
}

Tensor adaptive_avg_pool(Graph& g, const Tensor& x, std::size_t out_h, std::size_t out_w) {
    require_rank4(x, "adaptive_avg_pool");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (out_h == 0 || out_w == 0) throw ShapeError("adaptive_avg_pool: output size must be positive");
    if (out_h > h || out_w > w) throw ShapeError("adaptive_avg_pool: output larger than input");
    auto bin = [](std::size_t i, std::size_t in, std::size_t out) { return i * in / out; };

    Tensor y(Shape{n, c, out_h, out_w});
    for (std::size_t p = 0; p < n * c; ++p) {
        const double* xp = x.data().data() + p * h * w;
        for (std::size_t oy = 0; oy < out_h; ++oy)
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                const std::size_t y0 = bin(oy, h, out_h), y1 = bin(oy + 1, h, out_h);
                const std::size_t x0 = bin(ox, w, out_w), x1 = bin(ox + 1, w, out_w);
                double s = 0.0;
                for (std::size_t iy = y0; iy < y1; ++iy)
                    for (std::size_t ix = x0; ix < x1; ++ix) s += xp[iy * w + ix];
                y.data()[(p * out_h + oy) * out_w + ox] = s / static_cast<double>((y1 - y0) * (x1 - x0));
            }
    }

    if (g.tracks({&x})) {
        g.record("adaptive_avg_pool", y, [x, y, bin]() mutable {
            const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
            const std::size_t out_h = y.dim(2), out_w = y.dim(3);
            const double* gy = y.grad().data();
            double* gx = x.grad().data();
            for (std::size_t p = 0; p < n * c; ++p)
                for (std::size_t oy = 0; oy < out_h; ++oy)
                    for (std::size_t ox = 0; ox < out_w; ++ox) {
                        const std::size_t y0 = bin(oy, h, out_h), y1 = bin(oy + 1, h, out_h);
                        const std::size_t x0 = bin(ox, w, out_w), x1 = bin(ox + 1, w, out_w);
                        const double share =
                            gy[(p * out_h + oy) * out_w + ox] / static_cast<double>((y1 - y0) * (x1 - x0));
                        for (std::size_t iy = y0; iy < y1; ++iy)
                            for (std::size_t ix = x0; ix < x1; ++ix) gx[p * h * w + iy * w + ix] += share;
                    }
        });
    }
    return y;
}

Tensor avg_pool3x3_s2(Graph& g, const Tensor& x) {
    require_rank4(x, "avg_pool3x3_s2");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const auto geo = std::make_shared<ConvGeometry>(1, h, w, 3, 2, PadMode::symmetric);
    const std::size_t oh = geo->out_h, ow = geo->out_w;
    Tensor y(Shape{n, c, oh, ow});
    for (std::size_t p = 0; p < n * c; ++p) {
        const double* xp = x.data().data() + p * h * w;
        double* yp = y.data().data() + p * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double s = 0.0;
                for (std::size_t ky = 0; ky < 3; ++ky)
                    for (std::size_t kx = 0; kx < 3; ++kx)
                        s += xp[geo->rows[ky * oh + oy] * w + geo->cols[kx * ow + ox]];
                yp[oy * ow + ox] = s / 9.0;
            }
    }

    if (g.tracks({&x})) {
        g.record("avg_pool3x3_s2", y, [x, y, geo]() mutable {
            const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
            const std::size_t oh = geo->out_h, ow = geo->out_w;
            const double* gy = y.grad().data();
            double* gx = x.grad().data();
            for (std::size_t p = 0; p < n * c; ++p)
                for (std::size_t oy = 0; oy < oh; ++oy)
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const double share = gy[(p * oh + oy) * ow + ox] / 9.0;
                        for (std::size_t ky = 0; ky < 3; ++ky)
                            for (std::size_t kx = 0; kx < 3; ++kx)
                                gx[p * h * w + geo->rows[ky * oh + oy] * w + geo->cols[kx * ow + ox]] += share;
                    }
        });
    }
    return y;
}

Tensor upsample_nearest(Graph& g, const Tensor& x, std::size_t factor) {
    require_rank4(x, "upsample_nearest");
    if (factor == 0) throw ShapeError("upsample_nearest: factor must be positive");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = h * factor, ow = w * factor;
    Tensor y(Shape{n, c, oh, ow});
    for (std::size_t p = 0; p < n * c; ++p)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
                y.data()[(p * oh + oy) * ow + ox] = x.data()[(p * h + oy / factor) * w + ox / factor];

    if (g.tracks({&x})) {
        g.record("upsample_nearest", y, [x, y, factor]() mutable {
            const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
            const std::size_t oh = h * factor, ow = w * factor;
            const double* gy = y.grad().data();
            double* gx = x.grad().data();
            for (std::size_t p = 0; p < n * c; ++p)
                for (std::size_t oy = 0; oy < oh; ++oy)
                    for (std::size_t ox = 0; ox < ow; ++ox)
                        gx[(p * h + oy / factor) * w + ox / factor] += gy[(p * oh + oy) * ow + ox];
        });
    }
    return y;
}

Tensor pad_symmetric(Graph& g, const Tensor& x, std::size_t bottom, std::size_t right) {
    require_rank4(x, "pad_symmetric");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = h + bottom, ow = w + right;
    Tensor y(Shape{n, c, oh, ow});
    for (std::size_t p = 0; p < n * c; ++p)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
                y.data()[(p * oh + oy) * ow + ox] =
                    x.data()[(p * h + reflect_index(static_cast<std::ptrdiff_t>(oy), h)) * w +
                             reflect_index(static_cast<std::ptrdiff_t>(ox), w)];

    if (g.tracks({&x})) {
        g.record("pad_symmetric", y, [x, y]() mutable {
            const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
            const std::size_t oh = y.dim(2), ow = y.dim(3);
            const double* gy = y.grad().data();
            double* gx = x.grad().data();
            for (std::size_t p = 0; p < n * c; ++p)
                for (std::size_t oy = 0; oy < oh; ++oy)
                    for (std::size_t ox = 0; ox < ow; ++ox)
                        gx[(p * h + reflect_index(static_cast<std::ptrdiff_t>(oy), h)) * w +
                           reflect_index(static_cast<std::ptrdiff_t>(ox), w)] += gy[(p * oh + oy) * ow + ox];
        });
    }
    return y;
}

Tensor crop(Graph& g, const Tensor& x, std::size_t h, std::size_t w) {
    require_rank4(x, "crop");
    const std::size_t n = x.dim(0), c = x.dim(1), ih = x.dim(2), iw = x.dim(3);
    if (h > ih || w > iw || h == 0 || w == 0) throw ShapeError("crop: window outside input");
    Tensor y(Shape{n, c, h, w});
    for (std::size_t p = 0; p < n * c; ++p)
        for (std::size_t yy = 0; yy < h; ++yy)
            std::copy_n(x.data().data() + (p * ih + yy) * iw, w, y.data().data() + (p * h + yy) * w);

    if (g.tracks({&x})) {
        g.record("crop", y, [x, y]() mutable {
            const std::size_t n = x.dim(0), c = x.dim(1), ih = x.dim(2), iw = x.dim(3);
            const std::size_t h = y.dim(2), w = y.dim(3);
            const double* gy = y.grad().data();
            double* gx = x.grad().data();
            for (std::size_t p = 0; p < n * c; ++p)
                for (std::size_t yy = 0; yy < h; ++yy)
                    for (std::size_t xx = 0; xx < w; ++xx) gx[(p * ih + yy) * iw + xx] += gy[(p * h + yy) * w + xx];
        });
    }
    return y;
}

}  // namespace demonet::ad
