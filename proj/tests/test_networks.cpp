#include <doctest.h>

#include <cmath>

#include "demonet/error.hpp"
#include "demonet/networks.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace demonet;
using namespace demonet::nets;

namespace {

ad::Tensor random_batch(std::size_t n, std::size_t h, std::size_t w, Rng& rng) {
    std::vector<Image> imgs;
    for (std::size_t i = 0; i < n; ++i) imgs.push_back(testing::random_image(h, w, rng));
    return images_to_tensor(imgs);
}

ad::Tensor probe_loss(ad::Graph& g, const ad::Tensor& y, const ad::Tensor& r) { return ad::sum(g, ad::mul(g, y, r)); }

std::vector<double> running_stats(const WeightSet& ws) {
    std::vector<double> out;
    for (const auto& e : ws.entries())
        if (is_running_stat(e.name)) out.insert(out.end(), e.tensor.data().begin(), e.tensor.data().end());
    return out;
}

}  // namespace

TEST_CASE("A-net output shape and range") {
    Rng rng(1);
    auto w = ANetWeights::init(1);
    for (auto [h, wd] : {std::pair{64ul, 64ul}, {80ul, 96ul}, {65ul, 71ul}}) {
        ad::Graph g;
        const auto x = random_batch(2, h, wd, rng);
        const auto a = anet_forward(g, x, w, {});
        CHECK(a.shape() == ad::Shape{2, 3});
        for (double v : a.data()) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
    ad::Graph g;
    CHECK_THROWS_AS(anet_forward(g, random_batch(1, 63, 64, rng), w, {}), ShapeError);
    CHECK_THROWS_AS(anet_forward(g, ad::Tensor(ad::Shape{1, 1, 64, 64}), w, {}), ShapeError);
}

TEST_CASE("A-net is exactly invariant to the size of a constant image") {
    auto w = ANetWeights::init(2);
    const auto small = anet_forward(Image::filled(64, 64, {0.2, 0.5, 0.7}), w);
    const auto large = anet_forward(Image::filled(128, 96, {0.2, 0.5, 0.7}), w);
    for (std::size_t c = 0; c < 3; ++c) CHECK(small[c] == doctest::Approx(large[c]).epsilon(1e-12));
}

TEST_CASE("weight init is seeded and validated") {
    CHECK(ANetWeights::init(3).params.identical(ANetWeights::init(3).params));
    CHECK_FALSE(ANetWeights::init(3).params.identical(ANetWeights::init(4).params));
    CHECK(TNetWeights::init(3).params.identical(TNetWeights::init(3).params));
    CHECK_FALSE(TNetWeights::init(3).params.identical(TNetWeights::init(4).params));
    CHECK_NOTHROW(ANetWeights::init(0).validate());
    CHECK_NOTHROW(TNetWeights::init(0).validate());

    ANetWeights broken;
    const auto full = ANetWeights::init(0);
    for (std::size_t i = 1; i < full.params.entries().size(); ++i)
        broken.params.add(full.params.entries()[i].name, full.params.entries()[i].tensor);
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    ANetWeights reshaped;
    for (const auto& e : full.params.entries())
        reshaped.params.add(e.name, e.tensor.numel() == 3 ? ad::Tensor(ad::Shape{4}) : e.tensor);
    CHECK_THROWS_AS(reshaped.validate(), ConfigError);

    for (const auto& e : full.params.entries()) {
        if (e.name.ends_with(".running_var"))
            for (double v : e.tensor.data()) CHECK(v == 1.0);
        if (e.name.ends_with(".running_mean"))
            for (double v : e.tensor.data()) CHECK(v == 0.0);
    }
}

TEST_CASE("ShuffleUnit configuration checks") {
    CHECK_NOTHROW((ShuffleUnitConfig{24, 48, 3, Merge::cat}.validate()));
    CHECK_NOTHROW((ShuffleUnitConfig{96, 96, 4, Merge::add}.validate()));
    CHECK_THROWS_AS((ShuffleUnitConfig{96, 48, 4, Merge::add}.validate()), ConfigError);
    CHECK_THROWS_AS((ShuffleUnitConfig{24, 24, 3, Merge::cat}.validate()), ConfigError);
    CHECK_THROWS_AS((ShuffleUnitConfig{24, 50, 3, Merge::cat}.validate()), ConfigError);
    CHECK_THROWS_AS((ShuffleUnitConfig{24, 48, 0, Merge::cat}.validate()), ConfigError);

    const auto units = tnet_units();
    REQUIRE(units.size() == 2 + kTNetAddUnits);
    CHECK(units.front().in_channels == kTNetStemWidth);
    std::size_t scale = 1;
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (i > 0) CHECK(units[i].in_channels == units[i - 1].out_channels);
        scale *= units[i].stride();
    }
    CHECK(scale == kTNetDownsample);
}

TEST_CASE("ShuffleUnit shapes") {
    Rng rng(5);
    for (auto cfg : {ShuffleUnitConfig{24, 48, 3, Merge::cat}, ShuffleUnitConfig{96, 96, 4, Merge::add}}) {
        WeightSet p;
        init_shuffle_unit(p, "u.", cfg, 7);
        ad::Graph g;
        const auto x = testing::random_tensor(ad::Shape{2, cfg.in_channels, 10, 14}, rng, -1.0, 1.0);
        const auto y = shuffle_unit_forward(g, x, cfg, p, "u.", {.mode = Mode::train});
        const std::size_t s = cfg.stride();
        CHECK(y.shape() == ad::Shape{2, cfg.out_channels, 10 / s, 14 / s});
    }
}

TEST_CASE("T-net output shape and range") {
    Rng rng(6);
    auto w = TNetWeights::init(6);
    for (auto [h, wd] : {std::pair{16ul, 16ul}, {13ul, 18ul}, {7ul, 5ul}}) {
        ad::Graph g;
        const auto t = tnet_forward(g, random_batch(2, h, wd, rng), w, {.t_floor = 0.2});
        CHECK(t.shape() == ad::Shape{2, 1, h, wd});
        for (double v : t.data()) {
            CHECK(v >= 0.2);
            CHECK(v <= 1.0);
        }
    }
    const auto tm = tnet_forward(testing::random_image(9, 11, rng), w);
    CHECK(tm.height() == 9);
    CHECK(tm.width() == 11);
}

TEST_CASE("eval-mode outputs do not depend on batch composition") {
    Rng rng(7);
    auto wa = ANetWeights::init(7);
    auto wt = TNetWeights::init(7);
    const Image a = testing::random_image(64, 64, rng);
    const Image b = testing::random_image(64, 64, rng);
    const std::vector<Image> pair{a, b};
    ad::Graph g;
    const auto batched = anet_forward(g, images_to_tensor(pair), wa, {});
    const auto single = anet_forward(a, wa);
    for (std::size_t c = 0; c < 3; ++c) CHECK(batched.data()[c] == doctest::Approx(single[c]).epsilon(1e-12));
    ad::Graph g2;
    const auto tb = tnet_forward(g2, images_to_tensor(pair), wt, {});
    const auto ts = tnet_forward(b, wt);
    for (std::size_t y = 0; y < 64; ++y)
        for (std::size_t x = 0; x < 64; ++x) CHECK(tb.at(1, 0, y, x) == doctest::Approx(ts.at(y, x)).epsilon(1e-12));
}

TEST_CASE("running statistics update only in train mode when asked") {
    Rng rng(8);
    auto w = TNetWeights::init(8);
    const auto before = running_stats(w.params);
    const auto x = random_batch(2, 12, 12, rng);
    {
        ad::Graph g;
        tnet_forward(g, x, w, {});
    }
    CHECK(running_stats(w.params) == before);
    {
        ad::Graph g;
        tnet_forward(g, x, w, {.mode = Mode::train, .update_running_stats = false});
    }
    CHECK(running_stats(w.params) == before);
    {
        ad::Graph g;
        tnet_forward(g, x, w, {.mode = Mode::train});
    }
    CHECK(running_stats(w.params) != before);
}

// The networks are piecewise smooth (ReLU kinks, batch statistics over few
// values), so steps are small and near-zero gradients compare absolutely.
TEST_CASE("A-net gradients match finite differences") {
    Rng rng(9);
    auto w = ANetWeights::init(9);
    const auto x = random_batch(2, 64, 64, rng);
    const auto r = testing::random_tensor(ad::Shape{2, 3}, rng, -1.0, 1.0);
    std::vector<std::pair<std::string, ad::Tensor>> inputs;
    for (const auto& e : w.params.entries())
        if (!is_running_stat(e.name)) inputs.emplace_back(e.name, e.tensor);
    for (Mode mode : {Mode::eval, Mode::train}) {
        const testing::LossFn loss = [&](ad::Graph& g) {
            return probe_loss(g, anet_forward(g, x, w, {.mode = mode, .update_running_stats = false}), r);
        };
        const auto res = testing::gradcheck(loss, inputs, rng, {.h = 1e-6, .floor = 1e-3, .samples = 3, .retries = 2, .retry_above = 1e-4});
        INFO(res.worst);
        CHECK(res.max_rel_err < 1e-3);
    }
}

TEST_CASE("T-net gradients match finite differences") {
    Rng rng(10);
    auto w = TNetWeights::init(10);
    const auto x = random_batch(2, 12, 12, rng);
    const auto r = testing::random_tensor(ad::Shape{2, 1, 12, 12}, rng, -1.0, 1.0);
    std::vector<std::pair<std::string, ad::Tensor>> inputs;
    for (const auto& e : w.params.entries())
        if (!is_running_stat(e.name)) inputs.emplace_back(e.name, e.tensor);
    const testing::LossFn loss = [&](ad::Graph& g) {
        return probe_loss(g, tnet_forward(g, x, w, {.mode = Mode::train, .update_running_stats = false}), r);
    };
    const auto res = testing::gradcheck(loss, inputs, rng, {.h = 1e-6, .floor = 1e-3, .samples = 3, .retries = 2, .retry_above = 1e-4});
    INFO(res.worst);
    CHECK(res.max_rel_err < 1e-3);
}

TEST_CASE("demo_forward with T near one returns the input") {
    Rng rng(11);
    auto wt = TNetWeights::init(11);
    for (auto name : {"head.conv.weight", "head.conv.bias"}) {
        auto d = wt.params.get(name).data();
        std::fill(d.begin(), d.end(), std::string_view(name).ends_with("bias") ? 60.0 : 0.0);
    }
    const Image img = testing::random_image(16, 16, rng);
    const auto out = demo_forward(img, AtmosphericLight{{0.9, 0.8, 0.7}}, wt);
    for (double v : out.transmission.values()) CHECK(v == 1.0);
    for (std::size_t k = 0; k < img.samples().size(); ++k) CHECK(out.radiance.samples()[k] == img.samples()[k]);

    auto wa = ANetWeights::init(11);
    const Image big = testing::random_image(64, 64, rng);
    const auto full = demo_forward(big, wa, wt);
    for (double v : full.radiance.samples()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    const auto a = anet_forward(big, wa);
    CHECK(full.light == a);
}
