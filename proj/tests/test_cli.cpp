#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "demonet/cli.hpp"
#include "demonet/data_io.hpp"
#include "demonet/networks.hpp"
#include "support/tempdir.hpp"

using namespace demonet;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "demonet");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    auto r = run({});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({"--help"}).code == cli::kExitOk);
    r = run({"derain", "--input", "x.ppm"});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("--weights") != std::string::npos);
    CHECK(run({"dehaze", "--input", "x.ppm", "--out", "y.ppm", "--patch", "banana"}).code == cli::kExitUsage);
}

TEST_CASE("I/O failures exit with code 3") {
    testing::TempDir dir;
    CHECK(run({"init-a", "--input", dir.file("missing.ppm")}).code == cli::kExitIo);
    std::ofstream(dir.file("junk.bin")) << "not a weight file";
    io::save_image(io::generate_scene(16, 16, 1), dir.file("img.ppm"));
    CHECK(run({"derain", "--input", dir.file("img.ppm"), "--weights", dir.file("junk.bin"), "--out", dir.file("o.ppm")})
              .code == cli::kExitIo);
}

TEST_CASE("dehaze and init-a on a single image") {
    testing::TempDir dir;
    io::RainParams rp;
    rp.seed = 3;
    const auto pair = io::synthesize_pair(io::generate_scene(48, 48, 2), rp, AtmosphericLight{{0.9, 0.9, 0.9}});
    io::save_image(pair.rainy, dir.file("rainy.ppm"));

    auto r = run({"init-a", "--input", dir.file("rainy.ppm"), "--dump-mask", dir.file("mask.ppm")});
    CHECK(r.code == 0);
    CHECK(r.out.starts_with("A = "));
    CHECK(fs::exists(dir.file("mask.ppm")));

    r = run({"dehaze", "--input", dir.file("rainy.ppm"), "--out", dir.file("dh.ppm"), "--patch", "7",
             "--dump-transmission", dir.file("t.ppm"), "--dump-dark", dir.file("d.ppm")});
    CHECK(r.code == 0);
    for (auto f : {"dh.ppm", "t.ppm", "d.ppm"}) CHECK(fs::exists(dir.file(f)));
    CHECK(run({"dehaze", "--input", dir.file("rainy.ppm"), "--out", dir.file("x.ppm"), "--patch", "4"}).code ==
          cli::kExitUsage);
}

TEST_CASE("eval scores an identity manifest perfectly") {
    testing::TempDir dir;
    std::vector<io::ManifestRow> rows;
    for (int i = 0; i < 3; ++i) {
        const std::string name = "s" + std::to_string(i) + ".ppm";
        io::save_image(io::generate_scene(16, 16, i), dir.file(name));
        rows.push_back({"s" + std::to_string(i), name, name, AtmosphericLight{{0.8, 0.8, 0.8}}, 0, "test", ""});
    }
    io::write_manifest(dir.file("m.csv"), rows);
    const auto r = run({"eval", "--pairs-manifest", dir.file("m.csv")});
    CHECK(r.code == 0);
    CHECK(r.out.find("mean,99.0000,1.000000") != std::string::npos);
    CHECK(run({"eval", "--pairs-manifest", dir.file("m.csv"), "--split", "train"}).code == cli::kExitUsage);
}

TEST_CASE("synth, pretrain-a, train, derain and eval") {
    testing::TempDir dir;
    const std::string data = dir.file("data");
    auto r = run({"synth", "--scenes", "5", "--size", "64", "--out-dir", data, "--seed", "7", "--split", "0.8",
                  "--streak-len", "10", "20", "--angle", "-10", "10"});
    REQUIRE(r.code == 0);
    const std::string manifest = (fs::path(data) / "manifest.csv").string();
    REQUIRE(fs::exists(manifest));
    CHECK(io::read_manifest(manifest).size() == 5);
    CHECK(run({"synth", "--out-dir", data}).code == cli::kExitUsage);

    const std::string anet = dir.file("anet.bin");
    r = run({"pretrain-a", "--dataset", manifest, "--epochs", "1", "--batch-size", "2", "--out-weights", anet});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(anet));
    CHECK(slurp(anet + ".csv").starts_with("epoch,L_A,L,psnr,ssim,seconds\n"));

    const std::string full = dir.file("full.bin");
    r = run({"train", "--dataset", manifest, "--anet-weights", anet, "--variant", "full", "--epochs", "2",
             "--batch-size", "2", "--checkpoint-every", "1", "--out-weights", full});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(full));
    CHECK(fs::exists(full + ".epoch1"));
    CHECK(fs::exists(full + ".epoch2"));
    CHECK(r.out.find("psnr") != std::string::npos);

    CHECK(run({"train", "--dataset", manifest, "--variant", "full", "--out-weights", dir.file("x.bin")}).code ==
          cli::kExitUsage);
    CHECK(run({"train", "--dataset", manifest, "--variant", "a9", "--out-weights", dir.file("x.bin")}).code ==
          cli::kExitUsage);
    const std::string a1 = dir.file("a1.bin");
    CHECK(run({"train", "--dataset", manifest, "--variant", "a1", "--epochs", "1", "--out-weights", a1}).code == 0);

    const std::string outdir = dir.file("derained");
    r = run({"derain", "--input", (fs::path(data) / "rainy").string(), "--weights", full, "--out", outdir});
    REQUIRE(r.code == 0);
    for (const auto& row : io::read_manifest(manifest)) {
        const auto stem = (fs::path(outdir) / row.id).string();
        CHECK(fs::exists(stem + "_derained.ppm"));
        CHECK(fs::exists(stem + "_transmission.ppm"));
        CHECK(fs::exists(stem + "_transmission.tmap"));
        CHECK(slurp(stem + "_atmosphere.txt").size() > 5);
    }
    const auto first = io::read_manifest(manifest).front();
    const std::string one = (fs::path(data) / first.rainy).string();
    CHECK(run({"derain", "--input", one, "--weights", a1, "--out", dir.file("a1.ppm")}).code == 0);

    r = run({"eval", "--pairs-manifest", manifest, "--weights", full, "--report", dir.file("eval.csv")});
    CHECK(r.code == 0);
    CHECK(slurp(dir.file("eval.csv")).starts_with("id,psnr,ssim\n"));

    // Poisoned weights produce non-finite output.
    WeightSet w = io::load_weights(full);
    auto bias = w.get("tnet.head.conv.bias").data();
    bias[0] = std::numeric_limits<double>::quiet_NaN();
    io::save_weights(w, dir.file("nan.bin"));
    CHECK(run({"derain", "--input", one, "--weights", dir.file("nan.bin"), "--out", dir.file("nan.ppm")}).code ==
          cli::kExitNumeric);
}
