#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "demonet/data_io.hpp"
#include "demonet/error.hpp"
#include "demonet/networks.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace demonet;
using namespace demonet::io;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    f << bytes;
}

// Streak geometry replayed from the generator's draw order.
struct Streak {
    double cx, cy, len, wid, ang, amp, sigma;
};

Streak first_streak(const RainParams& p, std::size_t h, std::size_t w) {
    Rng rng(p.seed);
    Streak s{};
    s.cx = rng.uniform(0.0, static_cast<double>(w));
    s.cy = rng.uniform(0.0, static_cast<double>(h));
    s.len = rng.uniform(p.length.lo, p.length.hi);
    s.wid = rng.uniform(p.width.lo, p.width.hi);
    s.ang = rng.uniform(p.angle.lo, p.angle.hi) * M_PI / 180.0;
    s.amp = rng.uniform(p.intensity.lo, p.intensity.hi);
    s.sigma = rng.uniform(p.blur.lo, p.blur.hi);
    return s;
}

bool inside(const Streak& s, double x, double y) {
    const double px = x - s.cx, py = y - s.cy;
    const double along = px * std::sin(s.ang) + py * std::cos(s.ang);
    const double across = px * std::cos(s.ang) - py * std::sin(s.ang);
    return along >= -s.len / 2 && along < s.len / 2 && std::abs(across) < s.wid / 2;
}

}  // namespace

// ------------------------------------------------------------------ images

TEST_CASE("PPM round trip within half a quantisation step") {
    Rng rng(1);
    const Image img = testing::random_image(7, 9, rng);
    const Image back = decode_image(encode_image(img));
    REQUIRE(back.height() == 7);
    REQUIRE(back.width() == 9);
    for (std::size_t k = 0; k < img.samples().size(); ++k) CHECK(std::abs(back.samples()[k] - img.samples()[k]) <= 1.0 / 510 + 1e-15);
    // Quantised images survive exactly.
    CHECK(encode_image(back) == encode_image(img));
    CHECK(decode_image(encode_image(back)) == back);

    testing::TempDir dir;
    save_image(img, dir.file("a.ppm"));
    CHECK(load_image(dir.file("a.ppm")) == back);
}

TEST_CASE("netpbm decoding variants") {
    const std::string p6 = std::string("P6\n# comment\n2 1\n# another\n255\n") + std::string("\xff\x00\x80\x00\x00\x00", 6);
    const Image a = decode_image(p6);
    CHECK(a.at(0, 0, 0) == 1.0);
    CHECK(a.at(0, 0, 2) == 128.0 / 255.0);
    CHECK(a.at(0, 1, 1) == 0.0);

    const Image g = decode_image(std::string("P5 2 1 15\n") + std::string("\x0f\x05", 2));
    CHECK(g.at(0, 0, 1) == 1.0);
    for (std::size_t c = 0; c < 3; ++c) CHECK(g.at(0, 1, c) == 5.0 / 15.0);

    CHECK_THROWS_AS(decode_image("P3\n1 1\n255\n0 0 0"), FormatError);
    CHECK_THROWS_AS(decode_image("P6\n2 2\n255\n\x01"), FormatError);
    CHECK_THROWS_AS(decode_image("P6\n0 2\n255\n"), FormatError);
    CHECK_THROWS_AS(decode_image("P6\n1 1\n256\n\x01\x01\x01"), FormatError);
    CHECK_THROWS_AS(decode_image(std::string("P5 1 1 10\n\x0b", 10)), FormatError);
    CHECK_THROWS_AS(load_image("/nonexistent/demonet.ppm"), IoError);
}

TEST_CASE("gray and mask exports") {
    testing::TempDir dir;
    const std::vector<double> v{0.0, 0.5, 1.0, 2.0};
    save_gray(v, 2, 2, dir.file("g.ppm"));
    const Image g = load_image(dir.file("g.ppm"));
    CHECK(g.at(0, 1, 0) == 128.0 / 255.0);
    CHECK(g.at(1, 1, 2) == 1.0);
    RainMask m(2, 3);
    m.at(1, 2) = 1;
    save_mask(m, dir.file("m.ppm"));
    const Image mi = load_image(dir.file("m.ppm"));
    CHECK(mi.at(1, 2, 0) == 1.0);
    CHECK(mi.at(0, 0, 0) == 0.0);
}

// ----------------------------------------------------------------- weights

TEST_CASE("weight files round trip bit-exactly after f32 quantisation") {
    const auto w = nets::ANetWeights::init(3);
    const std::string bytes = encode_weights(w.params);
    const WeightSet back = decode_weights(bytes);
    REQUIRE(back.size() == w.params.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        const auto& a = w.params.entries()[i];
        const auto& b = back.entries()[i];
        CHECK(a.name == b.name);
        CHECK(a.tensor.shape() == b.tensor.shape());
        for (std::size_t k = 0; k < a.tensor.numel(); ++k) {
            const float fa = static_cast<float>(a.tensor.data()[k]);
            const float fb = static_cast<float>(b.tensor.data()[k]);
            CHECK(std::memcmp(&fa, &fb, sizeof fa) == 0);
            CHECK(b.tensor.data()[k] == static_cast<double>(fa));
        }
    }
    CHECK(encode_weights(back) == bytes);

    testing::TempDir dir;
    save_weights(w.params, dir.file("a.bin"));
    CHECK(read_bytes(dir.file("a.bin")) == bytes);
    CHECK(load_weights(dir.file("a.bin")).identical(back));
}

TEST_CASE("weight file layout") {
    WeightSet ws;
    ws.add("ab", ad::Tensor(ad::Shape{2}, {1.0, -0.5}));
    const std::string b = encode_weights(ws);
    const std::string expect_head = std::string("DEMO\x01\x02\x00" "ab\x01\x02\x00\x00\x00", 14);
    CHECK(b.substr(0, 14) == expect_head);
    REQUIRE(b.size() == 14 + 8);
    float f[2];
    std::memcpy(f, b.data() + 14, 8);
    CHECK(f[0] == 1.0f);
    CHECK(f[1] == -0.5f);

    const std::string empty = encode_weights(WeightSet{});
    CHECK(empty == std::string("DEMO\x01", 5));
    CHECK(decode_weights(empty).empty());
}

TEST_CASE("corrupt weight files raise format errors") {
    WeightSet ws;
    ws.add("x", ad::Tensor(ad::Shape{3, 2}, {1, 2, 3, 4, 5, 6}));
    ws.add("y", ad::Tensor::scalar(7.0));
    const std::string good = encode_weights(ws);
    CHECK_THROWS_AS(decode_weights("DEMX\x01"), FormatError);
    CHECK_THROWS_AS(decode_weights(std::string("DEMO\x02", 5)), FormatError);
    // Without a tensor count, cuts on a tensor boundary are valid shorter files.
    const std::size_t boundary = 5 + 2 + 1 + 1 + 8 + 24;
    CHECK(decode_weights(good.substr(0, 5)).empty());
    CHECK(decode_weights(good.substr(0, boundary)).size() == 1);
    for (std::size_t cut = 6; cut < good.size(); ++cut)
        if (cut != boundary) CHECK_THROWS_AS(decode_weights(good.substr(0, cut)), FormatError);
    std::string bad_len = good;
    bad_len[5] = '\x7f';
    CHECK_THROWS_AS(decode_weights(bad_len), FormatError);
    std::string dup = good;
    dup[5 + 2 + 1 + 1 + 8 + 24 + 2] = 'x';
    CHECK_THROWS_AS(decode_weights(dup), FormatError);
    CHECK_THROWS_AS(load_weights("/nonexistent/demonet.bin"), IoError);
}

TEST_CASE("transmission sidecar") {
    testing::TempDir dir;
    Rng rng(4);
    TransmissionMap t(5, 6);
    for (double& v : t.values()) v = rng.uniform();
    save_transmission(t, dir.file("t.tmap"));
    const auto back = load_transmission(dir.file("t.tmap"));
    REQUIRE(back.height() == 5);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(back.values()[i] == static_cast<double>(static_cast<float>(t.values()[i])));
    WeightSet other;
    other.add("weights", ad::Tensor(ad::Shape{2, 2}));
    save_weights(other, dir.file("o.tmap"));
    CHECK_THROWS_AS(load_transmission(dir.file("o.tmap")), FormatError);
}

// ------------------------------------------------------------------- rain

TEST_CASE("rain parameter validation") {
    CHECK_NOTHROW(RainParams{}.validate());
    RainParams p;
    p.density = -1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.length = {10, 5};
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.angle = {-100, 0};
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("rain field geometry matches a replayed oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RainParams p;
        p.seed = seed;
        p.blur = {0.0, 0.0};
        p.density = 1000.0 / (40.0 * 50.0);  // exactly one streak
        const auto tau = generate_rain_field(40, 50, p);
        const Streak s = first_streak(p, 40, 50);
        for (std::size_t y = 0; y < 40; ++y)
            for (std::size_t x = 0; x < 50; ++x)
                CHECK(tau.at(y, x) == (inside(s, static_cast<double>(x), static_cast<double>(y)) ? s.amp : 0.0));
    }
}

TEST_CASE("blurring conserves the mass of interior streaks") {
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; checked < 5 && seed < 200; ++seed) {
        RainParams p;
        p.seed = seed;
        p.density = 1000.0 / (120.0 * 120.0);
        const Streak s = first_streak(p, 120, 120);
        if (s.cx < 40 || s.cx > 80 || s.cy < 40 || s.cy > 80) continue;
        ++checked;
        double mass = 0.0, area = 0.0;
        const auto tau = generate_rain_field(120, 120, p);
        for (double v : tau.values()) {
            CHECK(v >= 0.0);
            mass += v;
        }
        for (std::size_t y = 0; y < 120; ++y)
            for (std::size_t x = 0; x < 120; ++x) area += inside(s, static_cast<double>(x), static_cast<double>(y));
        CHECK(mass == doctest::Approx(s.amp * area).epsilon(1e-12));
    }
    CHECK(checked == 5);
}

TEST_CASE("rain field basics") {
    RainParams p;
    p.density = 0.0;
    const auto none = generate_rain_field(16, 16, p);
    for (double v : none.values()) CHECK(v == 0.0);
    p = {};
    p.seed = 9;
    const auto a = generate_rain_field(32, 48, p);
    CHECK(a == generate_rain_field(32, 48, p));
    p.seed = 10;
    CHECK_FALSE(a == generate_rain_field(32, 48, p));
    CHECK_THROWS_AS(generate_rain_field(0, 4, p), ShapeError);
}

TEST_CASE("synthesize_pair follows the scattering model") {
    const Image clean = generate_scene(32, 32, 1);
    RainParams p;
    p.seed = 5;
    const AtmosphericLight a{{0.9, 0.8, 0.95}};
    const auto pair = synthesize_pair(clean, p, a);
    REQUIRE(pair.transmission);
    REQUIRE(pair.light);
    CHECK(*pair.light == a);
    CHECK(pair.clean == clean);
    CHECK(pair.rainy == physics::synthesize(clean, *pair.transmission, a));
    for (double t : pair.transmission->values()) {
        CHECK(t > 0.0);
        CHECK(t <= 1.0);
    }
    for (double v : clean.samples()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(generate_scene(32, 32, 1) == clean);
}

// ---------------------------------------------------------------- datasets

TEST_CASE("build_dataset, manifest and pair loading") {
    testing::TempDir dir;
    const fs::path src = dir.path() / "clean";
    fs::create_directories(src);
    for (int i = 0; i < 10; ++i) save_image(generate_scene(24, 20, i), (src / ("img" + std::to_string(i) + ".ppm")).string());
    write_bytes((src / "notes.txt").string(), "ignored");

    RainParams p;
    const Dataset ds = build_dataset(src.string(), p, 0.8, 42);
    CHECK(ds.train.size() == 8);
    CHECK(ds.test.size() == 2);
    std::set<std::string> ids;
    for (const auto* part : {&ds.train, &ds.test})
        for (const auto& e : *part) {
            ids.insert(e.id);
            REQUIRE(e.pair.light);
            for (double c : e.pair.light->rgb) {
                CHECK(c >= 0.7);
                CHECK(c <= 1.0);
            }
        }
    CHECK(ids.size() == 10);

    const Dataset again = build_dataset(src.string(), p, 0.8, 42);
    for (std::size_t i = 0; i < ds.train.size(); ++i) {
        CHECK(again.train[i].id == ds.train[i].id);
        CHECK(again.train[i].pair.rainy == ds.train[i].pair.rainy);
    }

    const std::string manifest = write_dataset(ds, (dir.path() / "out").string());
    const auto rows = read_manifest(manifest);
    CHECK(rows.size() == 10);
    const auto train = load_pairs(manifest, "train");
    const auto test = load_pairs(manifest, "test");
    CHECK(train.size() == 8);
    CHECK(test.size() == 2);
    CHECK(load_pairs(manifest).size() == 10);
    for (std::size_t i = 0; i < 8; ++i) {
        // Images pass through 8-bit files.
        for (std::size_t k = 0; k < train[i].rainy.samples().size(); ++k)
            CHECK(std::abs(train[i].rainy.samples()[k] - ds.train[i].pair.rainy.samples()[k]) <= 1.0 / 510 + 1e-12);
        REQUIRE(train[i].transmission);
        REQUIRE(train[i].light);
        CHECK(std::abs((*train[i].light)[0] - (*ds.train[i].pair.light)[0]) < 1e-9);
    }

    fs::create_directories(dir.path() / "one");
    save_image(generate_scene(8, 8, 0), (dir.path() / "one" / "a.ppm").string());
    CHECK_THROWS_AS(build_dataset((dir.path() / "one").string(), p, 0.8, 1), ConfigError);
    CHECK_THROWS_AS(build_dataset((dir.path() / "missing").string(), p, 0.8, 1), IoError);
}

TEST_CASE("manifest round trip and errors") {
    testing::TempDir dir;
    std::vector<ManifestRow> rows(2);
    rows[0] = {"a", "r/a.ppm", "c/a.ppm", AtmosphericLight{{0.75, 0.8, 0.9}}, 12345678901234ull, "train", ""};
    rows[1] = {"b", "r/b.ppm", "c/b.ppm", AtmosphericLight{{0.1 / 3, 1.0, 0.7}}, 7, "test", "t/b.tmap"};
    write_manifest(dir.file("m.csv"), rows);
    const auto back = read_manifest(dir.file("m.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].seed == 12345678901234ull);
    CHECK(back[1].light == rows[1].light);
    CHECK(back[1].transmission == "t/b.tmap");
    CHECK(back[0].transmission.empty());

    write_bytes(dir.file("bad.csv"), "id,rainy\n");
    CHECK_THROWS_AS(read_manifest(dir.file("bad.csv")), FormatError);
    write_bytes(dir.file("short.csv"), "id,rainy,clean,a_r,a_g,a_b,seed,split,transmission\nx,y\n");
    CHECK_THROWS_AS(read_manifest(dir.file("short.csv")), FormatError);
    CHECK_THROWS_AS(read_manifest(dir.file("nope.csv")), IoError);
}
