#include <doctest.h>

#include <cmath>

#include "demonet/data_io.hpp"
#include "demonet/error.hpp"
#include "demonet/metrics.hpp"
#include "demonet/training.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace demonet;
using namespace demonet::train;

namespace {

std::vector<SamplePair> tiny_pairs(std::size_t n, std::size_t side = 64) {
    std::vector<SamplePair> out;
    for (std::size_t i = 0; i < n; ++i) {
        io::RainParams rp;
        rp.seed = 100 + i;
        out.push_back(io::synthesize_pair(io::generate_scene(side, side, i), rp, AtmosphericLight{{0.9, 0.85, 0.8}}));
    }
    return out;
}

TrainConfig quick(Variant v) {
    TrainConfig cfg;
    cfg.variant = v;
    cfg.epochs = 2;
    cfg.batch_size = 2;
    cfg.crop = 64;
    cfg.eval_every = 0;
    return cfg;
}

std::vector<std::vector<double>> trainable_values(const WeightSet& w) {
    std::vector<std::vector<double>> out;
    for (const auto& t : w.trainable()) out.emplace_back(t.data().begin(), t.data().end());
    return out;
}

}  // namespace

TEST_CASE("variant names round trip") {
    for (Variant v : {Variant::full, Variant::a1, Variant::a2, Variant::a3}) CHECK(parse_variant(variant_name(v)) == v);
    CHECK_THROWS_AS(parse_variant("a4"), ConfigError);
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(TrainConfig{}.validate());
    auto bad = [](auto edit) {
        TrainConfig c;
        edit(c);
        CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    bad([](TrainConfig& c) { c.batch_size = 0; });
    bad([](TrainConfig& c) { c.lr = -1e-3; });
    bad([](TrainConfig& c) { c.finetune_ratio = -0.1; });
    bad([](TrainConfig& c) { c.t_floor = 0.0; });
    bad([](TrainConfig& c) { c.t_floor = 1.0; });
    bad([](TrainConfig& c) { c.beta1 = 1.0; });
    bad([](TrainConfig& c) { c.crop = 0; });
    CHECK_THROWS_AS((AdamConfig{1e-3, 0.9, 0.999, 0.0}.validate()), ConfigError);
}

TEST_CASE("loss examples") {
    CHECK(loss_a(AtmosphericLight{{0.5, 0.5, 0.5}}, AtmosphericLight{{0.6, 0.5, 0.4}}) == doctest::Approx(0.02));
    CHECK(loss_a(AtmosphericLight{{0.3, 0.2, 0.1}}, AtmosphericLight{{0.3, 0.2, 0.1}}) == 0.0);
    Rng rng(1);
    const Image j = testing::random_image(8, 8, rng, 0.0, 0.9);
    CHECK(loss_joint(j, j) == 0.0);
    Image off = j;
    for (double& v : off.samples()) v += 0.1;
    CHECK(loss_joint(off, j) == doctest::Approx(0.01));
}

TEST_CASE("tensor losses agree with value forms and differentiate") {
    Rng rng(2);
    const std::vector<AtmosphericLight> a{{{0.1, 0.5, 0.9}}, {{0.7, 0.2, 0.3}}}, b{{{0.2, 0.4, 0.9}}, {{0.6, 0.6, 0.1}}};
    ad::Graph g;
    const double batched = loss_a(g, lights_to_tensor(a), lights_to_tensor(b)).item();
    CHECK(batched == doctest::Approx((loss_a(a[0], b[0]) + loss_a(a[1], b[1])) / 2).epsilon(1e-14));

    const Image x = testing::random_image(5, 6, rng), y = testing::random_image(5, 6, rng);
    CHECK(loss_joint(g, image_to_tensor(x), image_to_tensor(y)).item() == doctest::Approx(loss_joint(x, y)).epsilon(1e-14));

    ad::Tensor ah = lights_to_tensor(a), at = lights_to_tensor(b);
    auto r1 = testing::gradcheck([&](ad::Graph& gg) { return loss_a(gg, ah, at); }, {{"a_hat", ah}}, rng);
    CHECK(r1.max_rel_err < 1e-6);
    ad::Tensor jh = image_to_tensor(x), jt = image_to_tensor(y);
    auto r2 = testing::gradcheck([&](ad::Graph& gg) { return loss_joint(gg, jh, jt); }, {{"j_hat", jh}}, rng);
    CHECK(r2.max_rel_err < 1e-6);
}

TEST_CASE("Adam matches a hand computation") {
    ad::Tensor p(ad::Shape{2}, {1.0, -2.0}, true);
    Adam opt({p}, AdamConfig{0.1, 0.9, 0.999, 1e-8});
    p.grad()[0] = 0.5;
    p.grad()[1] = -4.0;
    opt.step();
    // First step: m_hat = g, v_hat = g^2, so each entry moves by lr * sign(g).
    CHECK(p.data()[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
    CHECK(p.data()[1] == doctest::Approx(-2.0 + 0.1 * 4.0 / (4.0 + 1e-8)).epsilon(1e-14));
    CHECK(opt.state().step == 1);
    CHECK(opt.state().m[0][0] == doctest::Approx(0.05));
    CHECK(opt.state().v[0][1] == doctest::Approx(0.016));

    // Second step with grad 0 on entry 0: m = 0.045, v = 0.00024975.
    p.grad()[0] = 0.0;
    p.grad()[1] = -4.0;
    const double before = p.data()[0];
    opt.step();
    const double m = 0.045 / (1 - 0.81), v = 0.00024975 / (1 - 0.999 * 0.999);
    CHECK(p.data()[0] == doctest::Approx(before - 0.1 * m / (std::sqrt(v) + 1e-8)).epsilon(1e-12));

    ad::Tensor q = ad::Tensor::filled(ad::Shape{3}, 2.0, true);
    Adam frozen({q}, AdamConfig{0.0, 0.9, 0.999, 1e-8});
    q.grad()[1] = 3.0;
    frozen.step();
    for (double x : q.data()) CHECK(x == 2.0);

    ad::Tensor no_grad = ad::Tensor::filled(ad::Shape{2}, 1.5, true);
    Adam idle({no_grad}, AdamConfig{});
    idle.step();
    for (double x : no_grad.data()) CHECK(x == 1.5);

    std::vector<ad::Tensor> ps{p};
    AdamState wrong;
    wrong.m = {{0.0}};
    wrong.v = {{0.0}};
    wrong.step = 1;
    CHECK_THROWS_AS(optimizer_step(ps, wrong, AdamConfig{}), ShapeError);
}

TEST_CASE("light targets use the rule-based estimate") {
    const auto pairs = tiny_pairs(2);
    const auto t = light_targets(pairs);
    REQUIRE(t.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) CHECK(t[i].target == atmo::estimate(pairs[i].rainy).light);
}

TEST_CASE("pretraining reduces L_A and honours early stop") {
    const auto samples = light_targets(tiny_pairs(4));
    TrainConfig cfg = quick(Variant::full);
    cfg.epochs = 15;
    cfg.batch_size = 4;
    cfg.crop = 64;
    auto w0 = nets::ANetWeights::init(cfg.seed);
    const double before = evaluate_anet(samples, w0);
    auto res = pretrain_anet(samples, cfg);
    CHECK(res.report.epochs.size() == 15);
    CHECK(res.report.epochs.back().loss_a < res.report.epochs.front().loss_a);
    CHECK(evaluate_anet(samples, res.weights) < before);

    std::size_t calls = 0;
    auto stopped = pretrain_anet(samples, cfg, [&](const EpochRecord&) { return ++calls < 2; });
    CHECK(stopped.report.epochs.size() == 2);

    auto again = pretrain_anet(samples, cfg);
    CHECK(again.weights.params.identical(res.weights.params));
    CHECK(again.report.same_losses(res.report));
}

TEST_CASE("joint training variants") {
    const auto pairs = tiny_pairs(4);
    TrainConfig pcfg = quick(Variant::full);
    pcfg.crop = 64;
    auto anet = pretrain_anet(light_targets(pairs), pcfg).weights;

    SUBCASE("zero learning rate leaves trainable weights untouched") {
        TrainConfig cfg = quick(Variant::full);
        cfg.lr = 0.0;
        auto res = train_joint(pairs, anet, cfg);
        const auto init = nets::TNetWeights::init(Rng::derive(cfg.seed, 1).next());
        CHECK(trainable_values(res.tnet.params) == trainable_values(init.params));
        CHECK(trainable_values(res.anet.params) == trainable_values(anet.params));
    }
    SUBCASE("a3 keeps the A-net frozen and the input unmodified") {
        const auto snapshot = anet.params.clone();
        auto res = train_joint(pairs, anet, quick(Variant::a3));
        CHECK(res.anet.params.identical(snapshot));
        CHECK(anet.params.identical(snapshot));
        CHECK(std::isfinite(res.report.epochs.back().loss));
    }
    SUBCASE("a1 has no A-net") {
        auto res = train_joint(pairs, std::nullopt, quick(Variant::a1));
        CHECK(res.anet.params.empty());
        CHECK(std::isnan(res.report.epochs.back().loss_a));
        CHECK(std::isfinite(res.report.epochs.back().loss));
    }
    SUBCASE("a2 trains the A-net from scratch") {
        auto res = train_joint(pairs, std::nullopt, quick(Variant::a2));
        const auto init = nets::ANetWeights::init(Rng::derive(1, 2).next());
        CHECK(trainable_values(res.anet.params) != trainable_values(init.params));
    }
    SUBCASE("full with ratio zero reproduces a3 exactly") {
        TrainConfig full = quick(Variant::full);
        full.finetune_ratio = 0.0;
        auto f = train_joint(pairs, anet, full);
        auto a3 = train_joint(pairs, anet, quick(Variant::a3));
        CHECK(f.report.same_losses(a3.report));
        CHECK(f.tnet.params.identical(a3.tnet.params));
    }
    SUBCASE("full fine-tunes the A-net and is deterministic") {
        auto r1 = train_joint(pairs, anet, quick(Variant::full));
        auto r2 = train_joint(pairs, anet, quick(Variant::full));
        CHECK(trainable_values(r1.anet.params) != trainable_values(anet.params));
        CHECK(r1.report.same_losses(r2.report));
        CHECK(r1.tnet.params.identical(r2.tnet.params));
    }
    SUBCASE("crops too small for the A-net are rejected") {
        TrainConfig cfg = quick(Variant::a3);
        cfg.crop = 32;
        CHECK_THROWS_AS(train_joint(pairs, anet, cfg), ConfigError);
        cfg.variant = Variant::a1;
        CHECK_NOTHROW(train_joint(pairs, std::nullopt, cfg));
    }
    SUBCASE("missing pretrained weights are rejected") {
        CHECK_THROWS_AS(train_joint(pairs, std::nullopt, quick(Variant::full)), ConfigError);
        CHECK_THROWS_AS(train_joint(pairs, std::nullopt, quick(Variant::a3)), ConfigError);
    }
    SUBCASE("step limit, checkpoints and evaluation") {
        TrainConfig cfg = quick(Variant::a3);
        cfg.epochs = 3;
        cfg.checkpoint_every = 2;
        cfg.eval_every = 2;
        std::vector<std::size_t> saved;
        auto res = train_joint(pairs, anet, cfg, {}, {},
                               [&](std::size_t e, const nets::ANetWeights&, const nets::TNetWeights&) { saved.push_back(e); });
        CHECK(saved == std::vector<std::size_t>{2});
        REQUIRE(res.report.epochs.size() == 3);
        CHECK(std::isnan(res.report.epochs[0].psnr));
        CHECK(std::isfinite(res.report.epochs[1].psnr));
        CHECK(std::isfinite(res.report.epochs[2].psnr));

        cfg.max_steps = 3;
        auto limited = train_joint(pairs, anet, cfg);
        std::size_t steps = 0;
        for (const auto& e : limited.report.epochs) steps += e.steps;
        CHECK(steps == 3);
    }
}

TEST_CASE("report csv") {
    TrainReport r;
    r.epochs.push_back({1, 0.5, std::nan(""), 20.25, 0.75, 1.5, 2});
    const std::string csv = r.csv();
    CHECK(csv.starts_with("epoch,L_A,L,psnr,ssim,seconds\n"));
    CHECK(csv.find("1,0.5,,20.25,0.75,1.5") != std::string::npos);
}

TEST_CASE("restoration report") {
    const auto pairs = tiny_pairs(2);
    nets::ANetWeights none;
    auto tnet = nets::TNetWeights::init(3);
    const auto q = evaluate_restoration(pairs, none, tnet);
    CHECK(std::isfinite(q.psnr_output));
    CHECK(q.psnr_input == doctest::Approx((metrics::psnr(pairs[0].rainy, pairs[0].clean) +
                                           metrics::psnr(pairs[1].rainy, pairs[1].clean)) / 2));
}
