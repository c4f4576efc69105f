#include "demonet/training.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "demonet/atmolight.hpp"
#include "demonet/error.hpp"
#include "demonet/metrics.hpp"
#include "demonet/random.hpp"

namespace demonet::train {
namespace {

using ad::Graph;
using ad::Tensor;
using Clock = std::chrono::steady_clock;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double v) {
    if (std::isnan(v)) return {};
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

bool same_bits(double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return true;
    return std::memcmp(&a, &b, sizeof a) == 0;
}

struct CropPlan {
    std::size_t h, w;
};

template <class F>
CropPlan plan_crop(std::size_t n, std::size_t side, F dims) {
    CropPlan p{side, side};
    for (std::size_t i = 0; i < n; ++i) {
        auto [h, w] = dims(i);
        p.h = std::min(p.h, h);
        p.w = std::min(p.w, w);
    }
    return p;
}

struct Offset {
    std::size_t y, x;
};

Offset random_offset(Rng& rng, const Image& img, const CropPlan& plan) {
    const std::size_t y = rng.index(img.height() - plan.h + 1);
    const std::size_t x = rng.index(img.width() - plan.w + 1);
    return {y, x};
}

std::vector<std::vector<std::size_t>> epoch_batches(Rng& rng, std::size_t n, std::size_t batch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < n; i += batch)
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch)));
    return out;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool wants_eval(const TrainConfig& cfg, std::size_t epoch, bool last) {
    if (cfg.eval_every == 0) return false;
    return last || (epoch + 1) % cfg.eval_every == 0;
}

}  // namespace

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::a1: return "a1";
        case Variant::a2: return "a2";
        case Variant::a3: return "a3";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    for (Variant v : {Variant::full, Variant::a1, Variant::a2, Variant::a3})
        if (variant_name(v) == name) return v;
    throw ConfigError("unknown variant '" + std::string(name) + "' (expected full, a1, a2 or a3)");
}

void TrainConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
    if (!(finetune_ratio >= 0.0 && finetune_ratio <= 1.0)) throw ConfigError("fine-tune ratio must lie in [0, 1]");
    if (!(t_floor > 0.0 && t_floor < 1.0)) throw ConfigError("t_floor must lie in (0, 1)");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (crop == 0) throw ConfigError("crop size must be positive");
    adam().validate();
}

std::string TrainReport::csv() const {
    std::string out = "epoch,L_A,L,psnr,ssim,seconds\n";
    for (const auto& e : epochs) {
        out += std::to_string(e.epoch) + ',' + format_number(e.loss_a) + ',' + format_number(e.loss) + ',' +
               format_number(e.psnr) + ',' + format_number(e.ssim) + ',' + format_number(e.seconds) + '\n';
    }
    return out;
}

void TrainReport::write_csv(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write report '" + path + "'");
    f << csv();
    if (!f) throw IoError("failed writing report '" + path + "'");
}

bool TrainReport::same_losses(const TrainReport& other) const {
    if (epochs.size() != other.epochs.size()) return false;
    for (std::size_t i = 0; i < epochs.size(); ++i)
        if (!same_bits(epochs[i].loss_a, other.epochs[i].loss_a) || !same_bits(epochs[i].loss, other.epochs[i].loss))
            return false;
    return true;
}

std::vector<LightSample> light_targets(std::span<const SamplePair> pairs, double threshold) {
    std::vector<LightSample> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back({p.rainy, atmo::estimate(p.rainy, threshold).light});
    return out;
}

// ---------------------------------------------------------------- losses

Tensor loss_a(Graph& g, const Tensor& a_hat, const Tensor& a_tilde) {
    if (a_hat.shape().rank() != 2 || a_hat.dim(1) != 3 || !(a_hat.shape() == a_tilde.shape()))
        throw ShapeError("loss_a: expected matching N x 3 tensors, got " + a_hat.shape().str() + " and " +
                         a_tilde.shape().str());
    return ad::squared_error(g, a_hat, a_tilde, static_cast<double>(a_hat.dim(0)));
}

double loss_a(const AtmosphericLight& a_hat, const AtmosphericLight& a_tilde) {
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) s += (a_hat[c] - a_tilde[c]) * (a_hat[c] - a_tilde[c]);
    return s;
}

Tensor loss_joint(Graph& g, const Tensor& j_hat, const Tensor& j) {
    if (!(j_hat.shape() == j.shape()))
        throw ShapeError("loss_joint: shape " + j_hat.shape().str() + " vs " + j.shape().str());
    return ad::squared_error(g, j_hat, j, static_cast<double>(j.numel()));
}

double loss_joint(const Image& j_hat, const Image& j) {
    if (j_hat.height() != j.height() || j_hat.width() != j.width())
        throw ShapeError("loss_joint: image dimensions differ");
    const auto a = j_hat.samples(), b = j.samples();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

// --------------------------------------------------------------- stage 1

PretrainResult pretrain_anet(std::span<const LightSample> dataset, const TrainConfig& cfg,
                             const EpochCallback& on_epoch) {
    cfg.validate();
    if (dataset.empty()) throw ConfigError("pretrain_anet: empty dataset");
    const CropPlan plan = plan_crop(dataset.size(), cfg.crop, [&](std::size_t i) {
        return std::pair{dataset[i].image.height(), dataset[i].image.width()};
    });

    PretrainResult res{nets::ANetWeights::init(cfg.seed), {}};
    res.weights.params.set_trainable(true);
    Adam opt(res.weights.params.trainable(), cfg.adam());
    Rng rng(Rng::derive(cfg.seed, 0));
    nets::ForwardOptions fwd;
    fwd.mode = ad::Mode::train;
    fwd.t_floor = cfg.t_floor;

    std::size_t steps = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = Clock::now();
        double loss_sum = 0.0;
        std::size_t seen = 0, epoch_steps = 0;
        for (const auto& batch : epoch_batches(rng, dataset.size(), cfg.batch_size)) {
            if (cfg.max_steps && steps >= cfg.max_steps) break;
            std::vector<Image> crops;
            std::vector<AtmosphericLight> targets;
            for (std::size_t i : batch) {
                const auto off = random_offset(rng, dataset[i].image, plan);
                crops.push_back(crop(dataset[i].image, off.y, off.x, plan.h, plan.w));
                targets.push_back(dataset[i].target);
            }
            Graph g(cfg.check_finite);
            Tensor a_hat = nets::anet_forward(g, images_to_tensor(crops), res.weights, fwd);
            Tensor loss = loss_a(g, a_hat, lights_to_tensor(targets));
            loss_sum += loss.item() * static_cast<double>(batch.size());
            seen += batch.size();
            opt.zero_grad();
            ad::backward(g, loss);
            opt.step();
            ++steps;
            ++epoch_steps;
        }
        if (epoch_steps == 0) break;
        EpochRecord rec{epoch + 1, loss_sum / static_cast<double>(seen), kNaN, kNaN, kNaN, seconds_since(t0), epoch_steps};
        res.report.epochs.push_back(rec);
        if (on_epoch && !on_epoch(rec)) break;
    }
    res.weights.params.set_trainable(false);
    res.weights.params.drop_grads();
    return res;
}

double evaluate_anet(std::span<const LightSample> dataset, nets::ANetWeights& w) {
    if (dataset.empty()) throw ConfigError("evaluate_anet: empty dataset");
    double s = 0.0;
    for (const auto& d : dataset) s += loss_a(nets::anet_forward(d.image, w), d.target);
    return s / static_cast<double>(dataset.size());
}

// --------------------------------------------------------------- stage 2

QualityReport evaluate_restoration(std::span<const SamplePair> pairs, nets::ANetWeights& anet,
                                   nets::TNetWeights& tnet, double t_floor) {
    if (pairs.empty()) throw ConfigError("evaluate_restoration: no pairs");
    QualityReport q;
    for (const auto& p : pairs) {
        const AtmosphericLight light =
            anet.params.empty() ? atmo::estimate(p.rainy).light : nets::anet_forward(p.rainy, anet);
        const auto out = nets::demo_forward(p.rainy, light, tnet, t_floor);
        const auto before = metrics::evaluate(p.rainy, p.clean);
        const auto after = metrics::evaluate(out.radiance, p.clean);
        q.psnr_input += before.psnr;
        q.ssim_input += before.ssim;
        q.psnr_output += after.psnr;
        q.ssim_output += after.ssim;
    }
    const double n = static_cast<double>(pairs.size());
    q.psnr_input /= n;
    q.ssim_input /= n;
    q.psnr_output /= n;
    q.ssim_output /= n;
    return q;
}

JointResult train_joint(std::span<const SamplePair> dataset, const std::optional<nets::ANetWeights>& anet_init,
                        const TrainConfig& cfg, std::span<const SamplePair> validation,
                        const EpochCallback& on_epoch, const CheckpointCallback& on_checkpoint) {
    cfg.validate();
    if (dataset.empty()) throw ConfigError("train_joint: empty dataset");
    const Variant variant = cfg.variant;
    const bool pretrained = variant == Variant::full || variant == Variant::a3;
    if (pretrained && !anet_init)
        throw ConfigError("variant " + std::string(variant_name(variant)) + " requires pretrained A-net weights");
    for (const auto& p : dataset)
        if (p.rainy.height() != p.clean.height() || p.rainy.width() != p.clean.width())
            throw ShapeError("train_joint: rainy and clean images differ in size");
    const CropPlan plan = plan_crop(dataset.size(), cfg.crop, [&](std::size_t i) {
        return std::pair{dataset[i].rainy.height(), dataset[i].rainy.width()};
    });
    if (variant != Variant::a1 && (plan.h < nets::kANetMinSide || plan.w < nets::kANetMinSide))
        throw ConfigError("train_joint: crops of " + std::to_string(plan.h) + "x" + std::to_string(plan.w) +
                          " are too small for the A-net (64x64 minimum)");

    JointResult res;
    res.tnet = nets::TNetWeights::init(Rng::derive(cfg.seed, 1).next());
    res.tnet.params.set_trainable(true);
    Adam t_opt(res.tnet.params.trainable(), cfg.adam());

    std::optional<Adam> a_opt;
    nets::ForwardOptions a_fwd;
    a_fwd.t_floor = cfg.t_floor;
    if (pretrained) {
        anet_init->validate();
        res.anet.params = anet_init->params.clone();
        a_fwd.mode = ad::Mode::eval;
        a_fwd.update_running_stats = false;
    } else if (variant == Variant::a2) {
        res.anet = nets::ANetWeights::init(Rng::derive(cfg.seed, 2).next());
        a_fwd.mode = ad::Mode::train;
    }
    const bool anet_learns = variant == Variant::full || variant == Variant::a2;
    res.anet.params.set_trainable(anet_learns);
    if (anet_learns) a_opt.emplace(res.anet.params.trainable(), cfg.adam(cfg.finetune_ratio));

    const auto targets = light_targets(dataset);
    nets::ForwardOptions t_fwd;
    t_fwd.mode = ad::Mode::train;
    t_fwd.t_floor = cfg.t_floor;
    Rng rng(Rng::derive(cfg.seed, 0));
    const auto eval_set = validation.empty() ? dataset : validation;

    std::size_t steps = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = Clock::now();
        double loss_sum = 0.0, loss_a_sum = 0.0;
        std::size_t seen = 0, epoch_steps = 0;
        for (const auto& batch : epoch_batches(rng, dataset.size(), cfg.batch_size)) {
            if (cfg.max_steps && steps >= cfg.max_steps) break;
            std::vector<Image> rainy, clean;
            std::vector<AtmosphericLight> lights;
            for (std::size_t i : batch) {
                const auto off = random_offset(rng, dataset[i].rainy, plan);
                rainy.push_back(crop(dataset[i].rainy, off.y, off.x, plan.h, plan.w));
                clean.push_back(crop(dataset[i].clean, off.y, off.x, plan.h, plan.w));
                lights.push_back(targets[i].target);
            }
            Graph g(cfg.check_finite);
            const Tensor x = images_to_tensor(rainy);
            const Tensor a_tilde = lights_to_tensor(lights);
            const Tensor a = variant == Variant::a1 ? a_tilde : nets::anet_forward(g, x, res.anet, a_fwd);
            const Tensor t = nets::tnet_forward(g, x, res.tnet, t_fwd);
            const Tensor j_hat = ad::invert_scattering(g, x, t, a, cfg.t_floor);
            Tensor loss = loss_joint(g, j_hat, images_to_tensor(clean));

            loss_sum += loss.item() * static_cast<double>(batch.size());
            if (variant != Variant::a1) {
                Graph scratch;
                scratch.set_recording(false);
                loss_a_sum += loss_a(scratch, a, a_tilde).item() * static_cast<double>(batch.size());
            }
            seen += batch.size();

            t_opt.zero_grad();
            if (a_opt) a_opt->zero_grad();
            ad::backward(g, loss);
            t_opt.step();
            if (a_opt) a_opt->step();
            ++steps;
            ++epoch_steps;
        }
        if (epoch_steps == 0) break;

        const bool last = epoch + 1 == cfg.epochs || (cfg.max_steps && steps >= cfg.max_steps);
        EpochRecord rec{epoch + 1,
                        variant == Variant::a1 ? kNaN : loss_a_sum / static_cast<double>(seen),
                        loss_sum / static_cast<double>(seen),
                        kNaN,
                        kNaN,
                        0.0,
                        epoch_steps};
        if (wants_eval(cfg, epoch, last)) {
            const auto q = evaluate_restoration(eval_set, res.anet, res.tnet, cfg.t_floor);
            rec.psnr = q.psnr_output;
            rec.ssim = q.ssim_output;
        }
        rec.seconds = seconds_since(t0);
        res.report.epochs.push_back(rec);
        if (on_checkpoint && cfg.checkpoint_every && (epoch + 1) % cfg.checkpoint_every == 0)
            on_checkpoint(epoch + 1, res.anet, res.tnet);
        if (on_epoch && !on_epoch(rec)) break;
    }
    res.tnet.params.set_trainable(false);
    res.tnet.params.drop_grads();
    res.anet.params.set_trainable(false);
    res.anet.params.drop_grads();
    return res;
}

}  // namespace demonet::train
