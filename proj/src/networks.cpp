#include "demonet/networks.hpp"

#include <algorithm>
#include <cmath>

#include "demonet/error.hpp"
#include "demonet/random.hpp"

namespace demonet::nets {
namespace {

using ad::Graph;
using ad::PadMode;
using ad::Shape;
using ad::Tensor;

Tensor normal_tensor(Shape shape, double stddev, Rng& rng) {
    Tensor t(shape, true);
    for (double& v : t.data()) v = stddev * rng.normal();
    return t;
}

void add_conv(WeightSet& p, const std::string& name, std::size_t cout, std::size_t cin, std::size_t k, bool bias,
              Rng& rng) {
    p.add(name + ".weight", normal_tensor(Shape{cout, cin, k, k}, std::sqrt(2.0 / static_cast<double>(cin * k * k)), rng));
    if (bias) p.add(name + ".bias", Tensor(Shape{cout}, true));
}

void add_bn(WeightSet& p, const std::string& name, std::size_t c) {
    p.add(name + ".scale", Tensor::filled(Shape{c}, 1.0, true));
    p.add(name + ".shift", Tensor(Shape{c}, true));
    p.add(name + ".running_mean", Tensor(Shape{c}));
    p.add(name + ".running_var", Tensor::filled(Shape{c}, 1.0));
}

Tensor bn(Graph& g, const Tensor& x, WeightSet& p, const std::string& name, const ForwardOptions& opts) {
    ad::RunningStats stats{p.get(name + ".running_mean"), p.get(name + ".running_var")};
    ad::BatchNormOptions bo;
    bo.update_running = opts.update_running_stats;
    return ad::batch_norm(g, x, p.get(name + ".scale"), p.get(name + ".shift"), stats, opts.mode, bo);
}

Tensor conv(Graph& g, const Tensor& x, WeightSet& p, const std::string& name, std::size_t stride) {
    const Tensor no_bias;
    const std::string b = name + ".bias";
    return ad::conv2d(g, x, p.get(name + ".weight"), p.contains(b) ? p.get(b) : no_bias, stride, PadMode::symmetric);
}

void check_same_layout(const WeightSet& actual, const WeightSet& expected, const char* net) {
    for (const auto& e : expected.entries()) {
        if (!actual.contains(e.name)) throw ConfigError(std::string(net) + ": missing weight '" + e.name + "'");
        const Tensor& t = actual.get(e.name);
        if (!(t.shape() == e.tensor.shape()))
            throw ConfigError(std::string(net) + ": weight '" + e.name + "' has shape " + t.shape().str() +
                              ", expected " + e.tensor.shape().str());
    }
    if (actual.size() != expected.size()) throw ConfigError(std::string(net) + ": unexpected extra weights");
}

std::size_t stage_width(std::size_t stage) { return kANetBaseWidth << stage; }

}  // namespace

// ---------------------------------------------------------------- A-net

ANetWeights ANetWeights::init(std::uint64_t seed) {
    Rng rng(seed);
    ANetWeights w;
    add_conv(w.params, "conv0", kANetBaseWidth, 3, 3, true, rng);
    add_bn(w.params, "bn0", kANetBaseWidth);
    for (std::size_t s = 1; s <= kANetStages; ++s) {
        add_conv(w.params, "conv" + std::to_string(s), stage_width(s), stage_width(s - 1), 3, true, rng);
        add_bn(w.params, "bn" + std::to_string(s), stage_width(s));
    }
    const std::size_t feat = stage_width(kANetStages);
    w.params.add("fc.weight", normal_tensor(Shape{3, feat}, std::sqrt(1.0 / static_cast<double>(feat)), rng));
    w.params.add("fc.bias", Tensor(Shape{3}, true));
    return w;
}

void ANetWeights::validate() const { check_same_layout(params, init(0).params, "A-net"); }

Tensor anet_forward(Graph& g, const Tensor& images, ANetWeights& w, const ForwardOptions& opts) {
    if (images.shape().rank() != 4 || images.dim(1) != 3) throw ShapeError("anet_forward: expected N x 3 x H x W");
    if (images.dim(2) < kANetMinSide || images.dim(3) < kANetMinSide)
        throw ShapeError("anet_forward: image " + std::to_string(images.dim(2)) + "x" + std::to_string(images.dim(3)) +
                         " is smaller than 64x64");
    WeightSet& p = w.params;
    Tensor h = ad::relu(g, bn(g, conv(g, images, p, "conv0", 1), p, "bn0", opts));
    for (std::size_t s = 1; s <= kANetStages; ++s) {
        const std::string i = std::to_string(s);
        h = ad::relu(g, bn(g, conv(g, h, p, "conv" + i, 2), p, "bn" + i, opts));
    }
    h = ad::adaptive_avg_pool(g, h, 1, 1);
    return ad::sigmoid(g, ad::fully_connected(g, h, p.get("fc.weight"), p.get("fc.bias")));
}

AtmosphericLight anet_forward(const Image& img, ANetWeights& w) {
    Graph g;
    g.set_recording(false);
    return light_from_tensor(anet_forward(g, image_to_tensor(img), w, ForwardOptions{}));
}

// ---------------------------------------------------------- ShuffleUnit

void ShuffleUnitConfig::validate() const {
    const std::size_t branch = branch_channels(), mid = mid_channels();
    if (groups == 0) throw ConfigError("shuffle unit: groups must be positive");
    if (variant == Merge::add && in_channels != out_channels)
        throw ConfigError("shuffle unit (add): input and output channels must match");
    if (variant == Merge::cat && out_channels <= in_channels)
        throw ConfigError("shuffle unit (cat): output must be wider than input");
    if (in_channels % groups || branch % groups || mid == 0 || mid % groups)
        throw ConfigError("shuffle unit: channels " + std::to_string(in_channels) + "/" + std::to_string(mid) + "/" +
                          std::to_string(branch) + " not divisible by groups " + std::to_string(groups));
}

void init_shuffle_unit(WeightSet& p, std::string_view prefix, const ShuffleUnitConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    const std::size_t g = cfg.groups, mid = cfg.mid_channels(), branch = cfg.branch_channels();
    const std::string pre(prefix);
    auto pw = [&](const char* name, std::size_t cout, std::size_t cin) {
        p.add(pre + name + ".weight",
              normal_tensor(Shape{cout, cin / g, 1, 1}, std::sqrt(2.0 / static_cast<double>(cin / g)), rng));
    };
    auto dw = [&](const char* name) {
        p.add(pre + name + ".weight", normal_tensor(Shape{mid, 1, 3, 3}, std::sqrt(2.0 / 9.0), rng));
    };
    pw("pw1", mid, cfg.in_channels);
    add_bn(p, pre + "bn1", mid);
    dw("dw1");
    add_bn(p, pre + "bn2", mid);
    pw("pw2", mid, mid);
    add_bn(p, pre + "bn3", mid);
    dw("dw2");
    add_bn(p, pre + "bn4", mid);
    pw("pw3", branch, mid);
    add_bn(p, pre + "bn5", branch);
}

Tensor shuffle_unit_forward(Graph& g, const Tensor& x, const ShuffleUnitConfig& cfg, WeightSet& p,
                            std::string_view prefix, const ForwardOptions& opts) {
    cfg.validate();
    if (x.shape().rank() != 4 || x.dim(1) != cfg.in_channels)
        throw ShapeError("shuffle unit: input " + x.shape().str() + " does not have " +
                         std::to_string(cfg.in_channels) + " channels");
    const std::string pre(prefix);
    const std::size_t groups = cfg.groups;
    auto w = [&](const char* name) -> Tensor& { return p.get(pre + name + ".weight"); };

    Tensor b = ad::pointwise_group_conv(g, x, w("pw1"), groups);
    b = ad::relu(g, bn(g, b, p, pre + "bn1", opts));
    b = ad::channel_shuffle(g, b, groups);
    b = bn(g, ad::sdw_conv(g, b, w("dw1"), cfg.stride()), p, pre + "bn2", opts);
    b = ad::pointwise_group_conv(g, b, w("pw2"), groups);
    b = ad::relu(g, bn(g, b, p, pre + "bn3", opts));
    b = ad::channel_shuffle(g, b, groups);
    b = bn(g, ad::sdw_conv(g, b, w("dw2"), 1), p, pre + "bn4", opts);
    b = bn(g, ad::pointwise_group_conv(g, b, w("pw3"), groups), p, pre + "bn5", opts);

    Tensor merged = cfg.variant == Merge::add ? ad::add(g, x, b) : ad::concat_channels(g, ad::avg_pool3x3_s2(g, x), b);
    return ad::relu(g, merged);
}

// ---------------------------------------------------------------- T-net

std::vector<ShuffleUnitConfig> tnet_units() {
    std::vector<ShuffleUnitConfig> units{
        {kTNetStemWidth, 2 * kTNetStemWidth, 3, Merge::cat},
        {2 * kTNetStemWidth, 4 * kTNetStemWidth, 4, Merge::cat},
    };
    for (std::size_t i = 0; i < kTNetAddUnits; ++i)
        units.push_back({4 * kTNetStemWidth, 4 * kTNetStemWidth, 4, Merge::add});
    return units;
}

TNetWeights TNetWeights::init(std::uint64_t seed) {
    Rng rng(seed);
    TNetWeights w;
    add_conv(w.params, "stem.conv", kTNetStemWidth, 3, 3, true, rng);
    add_bn(w.params, "stem.bn", kTNetStemWidth);
    const auto units = tnet_units();
    for (std::size_t i = 0; i < units.size(); ++i)
        init_shuffle_unit(w.params, "unit" + std::to_string(i) + ".", units[i], rng.next());
    const std::size_t top = units.back().out_channels;
    add_conv(w.params, "fuse.conv", kTNetStemWidth, top, 3, true, rng);
    add_bn(w.params, "fuse.bn", kTNetStemWidth);
    add_conv(w.params, "head.conv", 1, kTNetStemWidth, 3, true, rng);
    // Start close to T = 1 so the initial restoration is near the identity.
    std::fill(w.params.get("head.conv.bias").data().begin(), w.params.get("head.conv.bias").data().end(), 3.0);
    return w;
}

void TNetWeights::validate() const { check_same_layout(params, init(0).params, "T-net"); }

Tensor tnet_forward(Graph& g, const Tensor& images, TNetWeights& w, const ForwardOptions& opts) {
    if (images.shape().rank() != 4 || images.dim(1) != 3) throw ShapeError("tnet_forward: expected N x 3 x H x W");
    const std::size_t h = images.dim(2), wd = images.dim(3);
    const std::size_t pad_h = (kTNetDownsample - h % kTNetDownsample) % kTNetDownsample;
    const std::size_t pad_w = (kTNetDownsample - wd % kTNetDownsample) % kTNetDownsample;
    WeightSet& p = w.params;

    Tensor x = (pad_h || pad_w) ? ad::pad_symmetric(g, images, pad_h, pad_w) : images;
    x = ad::relu(g, bn(g, conv(g, x, p, "stem.conv", 1), p, "stem.bn", opts));
    const auto units = tnet_units();
    for (std::size_t i = 0; i < units.size(); ++i)
        x = shuffle_unit_forward(g, x, units[i], p, "unit" + std::to_string(i) + ".", opts);
    x = ad::upsample_nearest(g, x, kTNetDownsample);
    x = ad::relu(g, bn(g, conv(g, x, p, "fuse.conv", 1), p, "fuse.bn", opts));
    x = ad::sigmoid(g, conv(g, x, p, "head.conv", 1));
    if (pad_h || pad_w) x = ad::crop(g, x, h, wd);
    if (opts.mode == Mode::eval) {
        // The clamp is not differentiated; a fresh tensor keeps the sigmoid's saved output intact.
        Tensor clamped(x.shape());
        std::transform(x.data().begin(), x.data().end(), clamped.data().begin(),
                       [&](double v) { return std::clamp(v, opts.t_floor, 1.0); });
        return clamped;
    }
    return x;
}

TransmissionMap tnet_forward(const Image& img, TNetWeights& w, double t_floor) {
    Graph g;
    g.set_recording(false);
    ForwardOptions opts;
    opts.t_floor = t_floor;
    return transmission_from_tensor(tnet_forward(g, image_to_tensor(img), w, opts));
}

// ------------------------------------------------------------ composite

DemoOutput demo_forward(const Image& img, const AtmosphericLight& light, TNetWeights& wt, double t_floor) {
    DemoOutput out;
    out.light = light;
    out.transmission = tnet_forward(img, wt, t_floor);
    out.radiance_unclipped = physics::recover_unclipped(img, out.transmission, light, t_floor);
    out.radiance = out.radiance_unclipped;
    out.radiance.clip01();
    return out;
}

DemoOutput demo_forward(const Image& img, ANetWeights& wa, TNetWeights& wt, double t_floor) {
    return demo_forward(img, anet_forward(img, wa), wt, t_floor);
}

}  // namespace demonet::nets
