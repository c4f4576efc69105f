#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "demonet/image.hpp"
#include "demonet/sample.hpp"
#include "demonet/weights.hpp"

namespace demonet::io {

// ------------------------------------------------------------ image files

/// Binary PPM (P6) or PGM (P5), maxval 1..255; samples mapped to v / maxval.
Image load_image(const std::string& path);
Image decode_image(std::string_view bytes);

/// Binary PPM, maxval 255, round(v * 255) clamped to [0, 255].
void save_image(const Image& img, const std::string& path);
std::string encode_image(const Image& img);

/// Single-channel field written as a gray PPM, value * 255.
void save_gray(std::span<const double> values, std::size_t height, std::size_t width, const std::string& path);
void save_mask(const RainMask& mask, const std::string& path);

// ---------------------------------------------------------- weight files

/// "DEMO", version byte 1, then per tensor: u16 name length, name bytes,
/// u8 rank, u32 dims, f32 row-major payload. Little-endian throughout.
std::string encode_weights(const WeightSet& w);
/// Throws FormatError on bad magic/version, truncation or duplicate names.
WeightSet decode_weights(std::string_view bytes);

void save_weights(const WeightSet& w, const std::string& path);
WeightSet load_weights(const std::string& path);

/// Exact f32 transmission sidecar: a weight file holding one H x W tensor.
inline constexpr std::string_view kTransmissionTensor = "transmission";
void save_transmission(const TransmissionMap& t, const std::string& path);
TransmissionMap load_transmission(const std::string& path);

// ------------------------------------------------------- rain synthesis

struct Range {
    double lo = 0.0, hi = 0.0;
};

struct RainParams {
    /// Streaks per 1000 pixels.
    double density = 4.0;
    Range length{8.0, 24.0};
    Range width{2.0, 5.0};
    /// Degrees from vertical.
    Range angle{-20.0, 20.0};
    /// Peak optical depth added by one streak.
    Range intensity{0.5, 1.5};
    Range blur{0.8, 2.0};
    std::uint64_t seed = 0;

    void validate() const;
};

/// Non-negative optical depth made of blurred oriented streaks. A pixel at
/// (x, y) belongs to a streak centred at c with unit direction d when its
/// offset along d lies in [-L/2, L/2) and its distance from the axis is below W/2.
OpticalDepthMap generate_rain_field(std::size_t height, std::size_t width, const RainParams& params);

SamplePair synthesize_pair(const Image& clean, const RainParams& params, const AtmosphericLight& a);

/// Smooth procedural scene used when no photographs are at hand.
Image generate_scene(std::size_t height, std::size_t width, std::uint64_t seed);

// -------------------------------------------------------------- datasets

struct DatasetEntry {
    std::string id;
    SamplePair pair;
    std::uint64_t seed = 0;
};

struct Dataset {
    std::vector<DatasetEntry> train, test;
};

/// Pairs every image in `clean_dir` (sorted by file name) with one rainy
/// rendering. Per-pair A is uniform in [0.7, 1]^3 and all randomness comes
/// from (seed, image index). Throws ConfigError with fewer than two images.
Dataset build_dataset(const std::string& clean_dir, const RainParams& params, double split_ratio,
                      std::uint64_t seed);

struct ManifestRow {
    std::string id, rainy, clean;
    AtmosphericLight light;
    std::uint64_t seed = 0;
    std::string split;
    /// Empty when no sidecar exists.
    std::string transmission;
};

/// Columns id,rainy,clean,a_r,a_g,a_b,seed,split,transmission. Paths are
/// stored as given.
void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::string& path);

/// Loads the pairs of a manifest, resolving relative paths against the
/// manifest's directory. An empty `split` selects every row.
std::vector<SamplePair> load_pairs(const std::string& manifest_path, std::string_view split = {});

/// Writes the dataset under out_dir (rainy/, clean/, transmission/, manifest.csv)
/// and returns the manifest path.
std::string write_dataset(const Dataset& ds, const std::string& out_dir);

}  // namespace demonet::io
