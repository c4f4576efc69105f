#include "demonet/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "demonet/atmolight.hpp"
#include "demonet/darkchannel.hpp"
#include "demonet/data_io.hpp"
#include "demonet/error.hpp"
#include "demonet/metrics.hpp"
#include "demonet/networks.hpp"
#include "demonet/training.hpp"

namespace demonet::cli {
namespace fs = std::filesystem;

namespace {

std::string light_text(const AtmosphericLight& a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f %.3f %.3f", a[0], a[1], a[2]);
    return buf;
}

io::Range to_range(const std::vector<double>& v, const char* flag) {
    if (v.empty() || v.size() > 2) throw ConfigError(std::string(flag) + " takes one or two values");
    return {v.front(), v.back()};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path + "'");
    f << text;
    if (!f) throw IoError("failed writing '" + path + "'");
}

void ensure_parent(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw IoError("cannot create '" + parent.string() + "': " + ec.message());
}

std::vector<fs::path> list_images(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".ppm" || ext == ".pgm" || ext == ".pnm")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

struct Networks {
    nets::ANetWeights anet;
    nets::TNetWeights tnet;
};

Networks load_networks(const std::string& path) {
    const WeightSet all = io::load_weights(path);
    Networks n;
    n.anet.params = all.extract(nets::kANetPrefix);
    n.tnet.params = all.extract(nets::kTNetPrefix);
    if (!n.anet.params.empty()) n.anet.validate();
    if (!n.tnet.params.empty()) n.tnet.validate();
    return n;
}

void save_networks(const std::string& path, const nets::ANetWeights* anet, const nets::TNetWeights* tnet) {
    WeightSet all;
    if (anet) all.merge(nets::kANetPrefix, anet->params);
    if (tnet) all.merge(nets::kTNetPrefix, tnet->params);
    ensure_parent(path);
    io::save_weights(all, path);
}

std::vector<SamplePair> training_pairs(const std::string& manifest) {
    auto pairs = io::load_pairs(manifest, "train");
    if (pairs.empty()) pairs = io::load_pairs(manifest);
    if (pairs.empty()) throw ConfigError("manifest '" + manifest + "' lists no pairs");
    return pairs;
}

void check_finite(const Image& img, const char* what) {
    for (double v : img.samples())
        if (!std::isfinite(v)) throw NumericError(std::string(what) + " contains NaN/Inf");
}

// Writes the restored image, transmission (8-bit view and f32 sidecar) and light text.
struct DerainOutputs {
    std::string image, transmission, atmosphere;
};

void derain_one(const fs::path& input, Networks& n, double t_floor, const DerainOutputs& outs, std::ostream& out) {
    const Image img = io::load_image(input.string());
    const AtmosphericLight light =
        n.anet.params.empty() ? atmo::estimate(img).light : nets::anet_forward(img, n.anet);
    const auto res = nets::demo_forward(img, light, n.tnet, t_floor);
    check_finite(res.radiance_unclipped, "restored image");
    ensure_parent(outs.image);
    io::save_image(res.radiance, outs.image);
    if (!outs.transmission.empty()) {
        ensure_parent(outs.transmission);
        io::save_gray(res.transmission.values(), res.transmission.height(), res.transmission.width(),
                      outs.transmission);
        io::save_transmission(res.transmission, fs::path(outs.transmission).replace_extension(".tmap").string());
    }
    if (!outs.atmosphere.empty()) {
        ensure_parent(outs.atmosphere);
        write_text(outs.atmosphere, light_text(light) + "\n");
    }
    out << input.filename().string() << ": A = " << light_text(light) << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Single-image rain removal through the atmospheric scattering model", "demonet"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Synthesize rainy/clean pairs and a manifest");
    std::string clean_dir, out_dir;
    std::uint64_t seed = 1;
    std::size_t scenes = 0, scene_size = 64;
    double split = 0.8;
    io::RainParams rain;
    std::vector<double> streak_len{rain.length.lo, rain.length.hi}, streak_width{rain.width.lo, rain.width.hi},
        angle{rain.angle.lo, rain.angle.hi}, intensity{rain.intensity.lo, rain.intensity.hi},
        blur{rain.blur.lo, rain.blur.hi};
    synth->add_option("--clean-dir", clean_dir, "Directory of clean PPM images");
    synth->add_option("--scenes", scenes, "Generate this many procedural clean scenes instead of --clean-dir");
    synth->add_option("--size", scene_size, "Side of generated scenes")->capture_default_str();
    synth->add_option("--out-dir", out_dir, "Output directory")->required();
    synth->add_option("--seed", seed, "Random seed")->capture_default_str();
    synth->add_option("--split", split, "Fraction of pairs in the train split")->capture_default_str();
    synth->add_option("--density", rain.density, "Streaks per 1000 pixels")->capture_default_str();
    synth->add_option("--streak-len", streak_len, "Streak length range (pixels)")->expected(1, 2);
    synth->add_option("--streak-width", streak_width, "Streak width range (pixels)")->expected(1, 2);
    synth->add_option("--angle", angle, "Angle range (degrees from vertical)")->expected(1, 2);
    synth->add_option("--intensity", intensity, "Optical depth range per streak")->expected(1, 2);
    synth->add_option("--blur", blur, "Gaussian blur sigma range (pixels)")->expected(1, 2);

    // init-a
    auto* init_a = app.add_subcommand("init-a", "Rule-based initial atmospheric light");
    std::string input, dump_mask;
    double threshold = atmo::kDefaultThreshold;
    init_a->add_option("--input", input, "Rainy image")->required();
    init_a->add_option("--threshold", threshold, "Rain residual threshold")->capture_default_str();
    init_a->add_option("--dump-mask", dump_mask, "Write the rain location map");

    // pretrain-a / train
    train::TrainConfig tc;
    std::string dataset, out_weights, report_path, anet_weights, variant = "full";
    auto* pretrain = app.add_subcommand("pretrain-a", "Stage 1: fit the A-net to initial light estimates");
    pretrain->add_option("--dataset", dataset, "Pairs manifest")->required();
    pretrain->add_option("--out-weights", out_weights, "Output weight file")->required();
    pretrain->add_option("--report", report_path, "Report CSV (default: <out-weights>.csv)");

    auto* trainc = app.add_subcommand("train", "Stage 2: train the T-net through the scattering model");
    trainc->add_option("--dataset", dataset, "Pairs manifest")->required();
    trainc->add_option("--anet-weights", anet_weights, "Pretrained A-net (variants full, a3)");
    trainc->add_option("--finetune-ratio", tc.finetune_ratio, "A-net learning-rate ratio")->capture_default_str();
    trainc->add_option("--variant", variant, "full, a1, a2 or a3")->capture_default_str();
    trainc->add_option("--out-weights", out_weights, "Output weight file")->required();
    trainc->add_option("--report", report_path, "Report CSV (default: <out-weights>.csv)");
    trainc->add_option("--t-floor", tc.t_floor, "Transmission floor")->capture_default_str();
    trainc->add_option("--max-steps", tc.max_steps, "Stop after this many steps (0: no limit)");
    trainc->add_option("--eval-every", tc.eval_every, "Evaluate every N epochs (0: never)")->capture_default_str();
    trainc->add_option("--checkpoint-every", tc.checkpoint_every, "Write <out-weights>.epochN every N epochs");
    for (auto* sub : {pretrain, trainc}) {
        sub->add_option("--epochs", tc.epochs, "Epochs")->capture_default_str();
        sub->add_option("--lr", tc.lr, "Learning rate")->capture_default_str();
        sub->add_option("--batch-size", tc.batch_size, "Batch size")->capture_default_str();
        sub->add_option("--crop", tc.crop, "Training crop side")->capture_default_str();
        sub->add_option("--seed", tc.seed, "Random seed")->capture_default_str();
    }

    // derain
    auto* derain = app.add_subcommand("derain", "Remove rain with trained networks");
    std::string weights, out_path, dump_t, dump_a;
    double t_floor = physics::kDefaultTFloor;
    derain->add_option("--input", input, "Rainy image, or a directory of images")->required();
    derain->add_option("--weights", weights, "Trained weight file")->required();
    derain->add_option("--out", out_path, "Output image, or directory when --input is one")->required();
    derain->add_option("--dump-transmission", dump_t, "Write the transmission map (PPM + .tmap sidecar)");
    derain->add_option("--dump-atmosphere", dump_a, "Write the atmospheric light as text");
    derain->add_option("--t-floor", t_floor, "Transmission floor")->capture_default_str();

    // dehaze
    auto* dehaze = app.add_subcommand("dehaze", "Dark channel prior baseline");
    std::size_t patch = 15;
    double omega = 1.0;
    std::string dump_dark;
    dehaze->add_option("--input", input, "Hazy or rainy image")->required();
    dehaze->add_option("--patch", patch, "Odd patch side")->capture_default_str();
    dehaze->add_option("--omega", omega, "Haze retention factor")->capture_default_str();
    dehaze->add_option("--out", out_path, "Output image")->required();
    dehaze->add_option("--dump-transmission", dump_t, "Write the transmission map");
    dehaze->add_option("--dump-dark", dump_dark, "Write the dark channel");
    dehaze->add_option("--t-floor", t_floor, "Transmission floor")->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "PSNR/SSIM over a pairs manifest");
    std::string manifest, split_name;
    eval->add_option("--pairs-manifest", manifest, "Pairs manifest")->required();
    eval->add_option("--weights", weights, "Weights to evaluate (omit to score the rainy inputs)");
    eval->add_option("--split", split_name, "Only rows of this split");
    eval->add_option("--report", report_path, "CSV output (default: standard output)");
    eval->add_option("--t-floor", t_floor, "Transmission floor")->capture_default_str();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        const auto chosen = app.get_subcommands();
        err << (chosen.empty() ? app.help() : chosen.front()->help());
        return kExitUsage;
    }

    try {
        if (*synth) {
            rain.length = to_range(streak_len, "--streak-len");
            rain.width = to_range(streak_width, "--streak-width");
            rain.angle = to_range(angle, "--angle");
            rain.intensity = to_range(intensity, "--intensity");
            rain.blur = to_range(blur, "--blur");
            if (clean_dir.empty() == (scenes == 0)) throw ConfigError("give exactly one of --clean-dir and --scenes");
            if (scenes) {
                clean_dir = (fs::path(out_dir) / "scenes").string();
                fs::create_directories(clean_dir);
                for (std::size_t i = 0; i < scenes; ++i) {
                    char name[32];
                    std::snprintf(name, sizeof name, "scene_%04zu.ppm", i);
                    io::save_image(io::generate_scene(scene_size, scene_size, seed * 1000003u + i),
                                   (fs::path(clean_dir) / name).string());
                }
            }
            const auto ds = io::build_dataset(clean_dir, rain, split, seed);
            const auto path = io::write_dataset(ds, out_dir);
            out << "wrote " << ds.train.size() + ds.test.size() << " pairs (" << ds.train.size() << " train, "
                << ds.test.size() << " test) to " << path << "\n";
        } else if (*init_a) {
            const Image img = io::load_image(input);
            const auto mask = atmo::rain_location_map(img, threshold);
            const auto init = atmo::init_atmospheric_light(img, mask);
            out << "A = " << light_text(init.light) << (init.fallback ? " (no rain pixels; brightest pixel used)" : "")
                << "\n";
            if (!dump_mask.empty()) {
                ensure_parent(dump_mask);
                io::save_mask(mask, dump_mask);
            }
        } else if (*pretrain) {
            const auto pairs = training_pairs(dataset);
            const auto samples = train::light_targets(pairs);
            tc.eval_every = 0;
            auto res = train::pretrain_anet(samples, tc, [&](const train::EpochRecord& r) {
                out << "epoch " << r.epoch << " L_A " << r.loss_a << "\n";
                return true;
            });
            save_networks(out_weights, &res.weights, nullptr);
            res.report.write_csv(report_path.empty() ? out_weights + ".csv" : report_path);
            out << "eval L_A " << train::evaluate_anet(samples, res.weights) << "\n";
        } else if (*trainc) {
            tc.variant = train::parse_variant(variant);
            const auto pairs = training_pairs(dataset);
            std::optional<nets::ANetWeights> init;
            if (!anet_weights.empty()) {
                auto n = load_networks(anet_weights);
                if (n.anet.params.empty()) throw ConfigError("'" + anet_weights + "' holds no A-net weights");
                init = std::move(n.anet);
            }
            auto res = train::train_joint(
                pairs, init, tc, {},
                [&](const train::EpochRecord& r) {
                    out << "epoch " << r.epoch << " L " << r.loss;
                    if (!std::isnan(r.psnr)) out << " psnr " << r.psnr << " ssim " << r.ssim;
                    out << "\n";
                    return true;
                },
                [&](std::size_t epoch, const nets::ANetWeights& a, const nets::TNetWeights& t) {
                    save_networks(out_weights + ".epoch" + std::to_string(epoch), a.params.empty() ? nullptr : &a,
                                  &t);
                });
            save_networks(out_weights, res.anet.params.empty() ? nullptr : &res.anet, &res.tnet);
            res.report.write_csv(report_path.empty() ? out_weights + ".csv" : report_path);
        } else if (*derain) {
            auto n = load_networks(weights);
            if (n.tnet.params.empty()) throw ConfigError("'" + weights + "' holds no T-net weights");
            if (fs::is_directory(input)) {
                const auto files = list_images(input);
                if (files.empty()) throw IoError("no images in '" + input + "'");
                for (const auto& f : files) {
                    const auto stem = (fs::path(out_path) / f.stem()).string();
                    derain_one(f, n, t_floor, {stem + "_derained.ppm", stem + "_transmission.ppm", stem + "_atmosphere.txt"},
                               out);
                }
            } else {
                derain_one(input, n, t_floor, {out_path, dump_t, dump_a}, out);
            }
        } else if (*dehaze) {
            const Image img = io::load_image(input);
            const auto res = dcp::dehaze(img, dcp::PatchSpec(patch), omega, t_floor);
            ensure_parent(out_path);
            io::save_image(res.radiance, out_path);
            if (!dump_t.empty()) {
                ensure_parent(dump_t);
                io::save_gray(res.transmission.values(), img.height(), img.width(), dump_t);
            }
            if (!dump_dark.empty()) {
                ensure_parent(dump_dark);
                io::save_gray(res.dark.values(), img.height(), img.width(), dump_dark);
            }
            out << "A = " << light_text(res.light) << "\n";
        } else if (*eval) {
            const auto rows = io::read_manifest(manifest);
            const auto pairs = io::load_pairs(manifest, split_name);
            std::optional<Networks> n;
            if (!weights.empty()) {
                n = load_networks(weights);
                if (n->tnet.params.empty()) throw ConfigError("'" + weights + "' holds no T-net weights");
            }
            std::string csv = "id,psnr,ssim\n";
            double sp = 0.0, ss = 0.0;
            std::size_t k = 0;
            for (const auto& r : rows) {
                if (!split_name.empty() && r.split != split_name) continue;
                const auto& p = pairs[k++];
                Image estimate = p.rainy;
                if (n) {
                    const AtmosphericLight light =
                        n->anet.params.empty() ? atmo::estimate(p.rainy).light : nets::anet_forward(p.rainy, n->anet);
                    const auto res = nets::demo_forward(p.rainy, light, n->tnet, t_floor);
                    check_finite(res.radiance_unclipped, "restored image");
                    estimate = res.radiance;
                }
                const auto m = metrics::evaluate(estimate, p.clean);
                sp += m.psnr;
                ss += m.ssim;
                char line[256];
                std::snprintf(line, sizeof line, "%s,%.4f,%.6f\n", r.id.c_str(), m.psnr, m.ssim);
                csv += line;
            }
            if (k == 0) throw ConfigError("no pairs selected from '" + manifest + "'");
            char line[128];
            std::snprintf(line, sizeof line, "mean,%.4f,%.6f\n", sp / static_cast<double>(k), ss / static_cast<double>(k));
            csv += line;
            if (report_path.empty()) {
                out << csv;
            } else {
                ensure_parent(report_path);
                write_text(report_path, csv);
                out << line;
            }
        }
    } catch (const NumericError& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ShapeError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace demonet::cli
