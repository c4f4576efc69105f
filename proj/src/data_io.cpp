#include "demonet/data_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>

#include "demonet/error.hpp"
#include "demonet/physics.hpp"
#include "demonet/random.hpp"

namespace demonet::io {
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("failed reading '" + path + "'");
    return bytes;
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path + "'");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing '" + path + "'");
}

std::uint8_t quantize(double v) {
    const double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    return static_cast<std::uint8_t>(q);
}

// Netpbm header reader: tokens separated by whitespace, '#' comments to end of line.
class HeaderReader {
public:
    explicit HeaderReader(std::string_view bytes) : b_(bytes) {}

    std::size_t number(const char* what) {
        skip_space();
        std::size_t v = 0;
        const char* first = b_.data() + pos_;
        auto [end, ec] = std::from_chars(first, b_.data() + b_.size(), v);
        if (ec != std::errc() || end == first) throw FormatError(std::string("netpbm: bad ") + what);
        pos_ += static_cast<std::size_t>(end - first);
        return v;
    }

    /// Exactly one whitespace byte separates the header from the raster.
    std::size_t raster_start() {
        if (pos_ >= b_.size() || !is_space(b_[pos_])) throw FormatError("netpbm: missing separator before raster");
        return pos_ + 1;
    }

private:
    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

    void skip_space() {
        while (pos_ < b_.size()) {
            if (is_space(b_[pos_])) {
                ++pos_;
            } else if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view b_;
    std::size_t pos_ = 2;
};

// Little-endian primitives.
void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }
void put_u16(std::string& out, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
public:
    explicit ByteReader(std::string_view b) : b_(b) {}
    bool done() const { return pos_ == b_.size(); }
    std::size_t remaining() const { return b_.size() - pos_; }

    std::string_view take(std::size_t n, const char* what) {
        if (remaining() < n) throw FormatError(std::string("weights: truncated ") + what);
        auto s = b_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint32_t le(std::size_t n, const char* what) {
        auto s = take(n, what);
        std::uint32_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }

private:
    std::string_view b_;
    std::size_t pos_ = 0;
};

constexpr std::string_view kMagic = "DEMO";
constexpr std::uint8_t kVersion = 1;

std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const char* what) {
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) throw FormatError(std::string("manifest: bad ") + what);
    return v;
}

void check_range(const Range& r, double min, double max, const char* name) {
    if (!(r.lo <= r.hi) || r.lo < min || r.hi > max)
        throw ConfigError(std::string("rain params: ") + name + " range [" + fmt(r.lo) + ", " + fmt(r.hi) +
                          "] must be ordered and within [" + fmt(min) + ", " + fmt(max) + "]");
}

std::vector<double> gaussian_kernel(double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * static_cast<std::size_t>(r) + 1);
    double s = 0.0;
    for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& v : k) v /= s;
    return k;
}

// Separable blur of a w x h buffer; samples outside are zero.
void blur(std::vector<double>& buf, std::size_t w, std::size_t h, double sigma) {
    const auto k = gaussian_kernel(sigma);
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k.size() / 2);
    std::vector<double> tmp(buf.size(), 0.0);
    const auto sw = static_cast<std::ptrdiff_t>(w), sh = static_cast<std::ptrdiff_t>(h);
    for (std::ptrdiff_t y = 0; y < sh; ++y)
        for (std::ptrdiff_t x = 0; x < sw; ++x) {
            double s = 0.0;
            for (std::ptrdiff_t i = -r; i <= r; ++i) {
                const std::ptrdiff_t xx = x + i;
                if (xx >= 0 && xx < sw) s += k[static_cast<std::size_t>(i + r)] * buf[static_cast<std::size_t>(y * sw + xx)];
            }
            tmp[static_cast<std::size_t>(y * sw + x)] = s;
        }
    for (std::ptrdiff_t y = 0; y < sh; ++y)
        for (std::ptrdiff_t x = 0; x < sw; ++x) {
            double s = 0.0;
            for (std::ptrdiff_t i = -r; i <= r; ++i) {
                const std::ptrdiff_t yy = y + i;
                if (yy >= 0 && yy < sh) s += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(yy * sw + x)];
            }
            buf[static_cast<std::size_t>(y * sw + x)] = s;
        }
}

}  // namespace

// ------------------------------------------------------------ image files

Image decode_image(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5'))
        throw FormatError("netpbm: expected P6 or P5 magic");
    const bool color = bytes[1] == '6';
    HeaderReader hr(bytes);
    const std::size_t w = hr.number("width");
    const std::size_t h = hr.number("height");
    const std::size_t maxval = hr.number("maxval");
    if (w == 0 || h == 0) throw FormatError("netpbm: zero image dimension");
    if (maxval == 0 || maxval > 255) throw FormatError("netpbm: maxval must be in 1..255");
    const std::size_t start = hr.raster_start();
    const std::size_t channels = color ? 3 : 1;
    if (w > (std::size_t(1) << 28) / h) throw FormatError("netpbm: image too large");
    const std::size_t need = w * h * channels;
    if (bytes.size() - start < need) throw FormatError("netpbm: truncated raster");

    Image img(h, w);
    auto px = img.samples();
    const double scale = 1.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < w * h; ++i)
        for (std::size_t c = 0; c < 3; ++c) {
            const auto v = static_cast<unsigned char>(bytes[start + i * channels + (color ? c : 0)]);
            if (v > maxval) throw FormatError("netpbm: sample exceeds maxval");
            px[i * 3 + c] = static_cast<double>(v) * scale;
        }
    return img;
}

Image load_image(const std::string& path) {
    try {
        return decode_image(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError("'" + path + "': " + e.what());
    }
}

std::string encode_image(const Image& img) {
    if (img.empty()) throw ShapeError("save_image: empty image");
    std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    out.reserve(out.size() + img.samples().size());
    for (double v : img.samples()) out.push_back(static_cast<char>(quantize(v)));
    return out;
}

void save_image(const Image& img, const std::string& path) { write_file(path, encode_image(img)); }

void save_gray(std::span<const double> values, std::size_t height, std::size_t width, const std::string& path) {
    if (values.size() != height * width) throw ShapeError("save_gray: value count does not match dimensions");
    Image img(height, width);
    auto px = img.samples();
    for (std::size_t i = 0; i < values.size(); ++i) px[3 * i] = px[3 * i + 1] = px[3 * i + 2] = values[i];
    save_image(img, path);
}

void save_mask(const RainMask& mask, const std::string& path) {
    std::vector<double> v(mask.size());
    std::transform(mask.values().begin(), mask.values().end(), v.begin(), [](std::uint8_t m) { return m ? 1.0 : 0.0; });
    save_gray(v, mask.height(), mask.width(), path);
}

// ---------------------------------------------------------- weight files

std::string encode_weights(const WeightSet& w) {
    std::string out(kMagic);
    put_u8(out, kVersion);
    for (const auto& e : w.entries()) {
        if (e.name.size() > 0xffff) throw ConfigError("weights: name too long '" + e.name.substr(0, 32) + "...'");
        put_u16(out, static_cast<std::uint16_t>(e.name.size()));
        out += e.name;
        const auto dims = e.tensor.shape().dims();
        put_u8(out, static_cast<std::uint8_t>(dims.size()));
        for (std::size_t d : dims) {
            if (d > 0xffffffffu) throw ConfigError("weights: dimension too large in '" + e.name + "'");
            put_u32(out, static_cast<std::uint32_t>(d));
        }
        for (double v : e.tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return out;
}

WeightSet decode_weights(std::string_view bytes) {
    ByteReader r(bytes);
    if (r.remaining() < kMagic.size() + 1 || r.take(kMagic.size(), "magic") != kMagic)
        throw FormatError("weights: bad magic");
    const auto version = r.le(1, "version");
    if (version != kVersion) throw FormatError("weights: unsupported version " + std::to_string(version));

    WeightSet out;
    std::set<std::string, std::less<>> seen;
    while (!r.done()) {
        const std::size_t len = r.le(2, "name length");
        std::string name(r.take(len, "name"));
        if (seen.contains(name)) throw FormatError("weights: duplicate tensor '" + name + "'");
        seen.insert(name);
        const std::size_t rank = r.le(1, "rank");
        if (rank > ad::Shape::kMaxRank) throw FormatError("weights: rank " + std::to_string(rank) + " too large");
        std::vector<std::size_t> dims(rank);
        std::size_t count = 1;
        for (auto& d : dims) {
            d = r.le(4, "dimensions");
            if (d != 0 && count > r.remaining() / d) throw FormatError("weights: truncated payload of '" + name + "'");
            count *= d;
        }
        if (r.remaining() / 4 < count) throw FormatError("weights: truncated payload of '" + name + "'");
        std::vector<double> values(count);
        for (double& v : values) v = static_cast<double>(std::bit_cast<float>(r.le(4, "payload")));
        out.add(std::move(name), ad::Tensor(ad::Shape(std::span<const std::size_t>(dims)), std::move(values)));
    }
    return out;
}

void save_weights(const WeightSet& w, const std::string& path) { write_file(path, encode_weights(w)); }

WeightSet load_weights(const std::string& path) {
    try {
        return decode_weights(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError("'" + path + "': " + e.what());
    }
}

void save_transmission(const TransmissionMap& t, const std::string& path) {
    WeightSet w;
    w.add(std::string(kTransmissionTensor),
          ad::Tensor(ad::Shape{t.height(), t.width()}, std::vector<double>(t.values().begin(), t.values().end())));
    save_weights(w, path);
}

TransmissionMap load_transmission(const std::string& path) {
    const WeightSet w = load_weights(path);
    if (w.size() != 1 || !w.contains(kTransmissionTensor))
        throw FormatError("'" + path + "': expected a single 'transmission' tensor");
    const auto& t = w.get(kTransmissionTensor);
    if (t.shape().rank() != 2) throw FormatError("'" + path + "': transmission must be two-dimensional");
    return TransmissionMap(t.dim(0), t.dim(1), std::vector<double>(t.data().begin(), t.data().end()));
}

// ------------------------------------------------------- rain synthesis

void RainParams::validate() const {
    if (!(density >= 0.0) || !std::isfinite(density)) throw ConfigError("rain params: density must be >= 0");
    check_range(length, 0.0, 1e6, "length");
    check_range(width, 0.0, 1e6, "width");
    check_range(angle, -90.0, 90.0, "angle");
    check_range(intensity, 0.0, 1e3, "intensity");
    check_range(blur, 0.0, 100.0, "blur");
}

OpticalDepthMap generate_rain_field(std::size_t height, std::size_t width, const RainParams& params) {
    params.validate();
    if (height == 0 || width == 0) throw ShapeError("generate_rain_field: empty field");
    OpticalDepthMap tau(height, width);
    Rng rng(params.seed);
    const auto count = static_cast<std::size_t>(
        std::llround(params.density * static_cast<double>(height) * static_cast<double>(width) / 1000.0));
    const double fw = static_cast<double>(width), fh = static_cast<double>(height);

    for (std::size_t s = 0; s < count; ++s) {
        const double cx = rng.uniform(0.0, fw), cy = rng.uniform(0.0, fh);
        const double len = rng.uniform(params.length.lo, params.length.hi);
        const double wid = rng.uniform(params.width.lo, params.width.hi);
        const double ang = rng.uniform(params.angle.lo, params.angle.hi) * M_PI / 180.0;
        const double amp = rng.uniform(params.intensity.lo, params.intensity.hi);
        const double sigma = rng.uniform(params.blur.lo, params.blur.hi);

        // Direction along the streak and its normal, in (x, y) image coordinates.
        const double dx = std::sin(ang), dy = std::cos(ang);
        const double nx = dy, ny = -dx;
        const double ex = std::abs(dx) * len / 2 + std::abs(nx) * wid / 2;
        const double ey = std::abs(dy) * len / 2 + std::abs(ny) * wid / 2;
        const double margin = sigma > 0.0 ? std::ceil(3.0 * sigma) : 0.0;
        const auto lo = [](double v) { return static_cast<std::ptrdiff_t>(std::floor(v)); };
        const auto x0 = std::max<std::ptrdiff_t>(0, lo(cx - ex - margin) - 1);
        const auto y0 = std::max<std::ptrdiff_t>(0, lo(cy - ey - margin) - 1);
        const auto x1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(width) - 1, lo(cx + ex + margin) + 1);
        const auto y1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(height) - 1, lo(cy + ey + margin) + 1);
        if (x1 < x0 || y1 < y0) continue;

        const auto bw = static_cast<std::size_t>(x1 - x0 + 1), bh = static_cast<std::size_t>(y1 - y0 + 1);
        std::vector<double> buf(bw * bh, 0.0);
        for (std::size_t by = 0; by < bh; ++by)
            for (std::size_t bx = 0; bx < bw; ++bx) {
                const double px = static_cast<double>(x0 + static_cast<std::ptrdiff_t>(bx)) - cx;
                const double py = static_cast<double>(y0 + static_cast<std::ptrdiff_t>(by)) - cy;
                const double along = px * dx + py * dy;
                const double across = px * nx + py * ny;
                if (along >= -len / 2 && along < len / 2 && std::abs(across) < wid / 2) buf[by * bw + bx] = 1.0;
            }
        if (sigma > 0.0) blur(buf, bw, bh, sigma);
        for (std::size_t by = 0; by < bh; ++by)
            for (std::size_t bx = 0; bx < bw; ++bx)
                tau.at(static_cast<std::size_t>(y0) + by, static_cast<std::size_t>(x0) + bx) += amp * buf[by * bw + bx];
    }
    return tau;
}

SamplePair synthesize_pair(const Image& clean, const RainParams& params, const AtmosphericLight& a) {
    SamplePair p;
    p.clean = clean;
    p.transmission = physics::transmission_from_depth(generate_rain_field(clean.height(), clean.width(), params));
    p.rainy = physics::synthesize(clean, *p.transmission, a);
    p.light = a;
    return p;
}

Image generate_scene(std::size_t height, std::size_t width, std::uint64_t seed) {
    if (height == 0 || width == 0) throw ShapeError("generate_scene: empty image");
    Rng rng(seed);
    Image img(height, width);
    const double fh = static_cast<double>(height), fw = static_cast<double>(width);

    std::array<double, 3> top{}, bottom{};
    for (std::size_t c = 0; c < 3; ++c) {
        top[c] = rng.uniform(0.25, 0.7);
        bottom[c] = rng.uniform(0.05, 0.45);
    }
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const double t = static_cast<double>(y) / fh;
            for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = (1 - t) * top[c] + t * bottom[c];
        }

    const std::size_t shapes = 4 + rng.index(6);
    for (std::size_t s = 0; s < shapes; ++s) {
        std::array<double, 3> col{};
        for (double& c : col) c = rng.uniform(0.02, 0.8);
        const double cx = rng.uniform(0, fw), cy = rng.uniform(0, fh);
        const double rx = rng.uniform(0.08, 0.35) * fw, ry = rng.uniform(0.08, 0.35) * fh;
        const bool ellipse = rng.uniform() < 0.5;
        const double fx = rng.uniform(0.05, 0.4), fy = rng.uniform(0.05, 0.4), amp = rng.uniform(0.0, 0.08);
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                const double u = (static_cast<double>(x) - cx) / rx, v = (static_cast<double>(y) - cy) / ry;
                const bool inside = ellipse ? u * u + v * v <= 1.0 : std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
                if (!inside) continue;
                const double tex = amp * std::sin(fx * static_cast<double>(x)) * std::cos(fy * static_cast<double>(y));
                for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(col[c] + tex, 0.0, 1.0);
            }
    }
    return img;
}

// -------------------------------------------------------------- datasets

Dataset build_dataset(const std::string& clean_dir, const RainParams& params, double split_ratio,
                      std::uint64_t seed) {
    params.validate();
    if (!(split_ratio >= 0.0 && split_ratio <= 1.0)) throw ConfigError("split ratio must lie in [0, 1]");
    std::error_code ec;
    if (!fs::is_directory(clean_dir, ec)) throw IoError("'" + clean_dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(clean_dir)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".ppm" || ext == ".pgm" || ext == ".pnm")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.size() < 2)
        throw ConfigError("'" + clean_dir + "' holds " + std::to_string(files.size()) + " images; need at least 2");

    std::vector<DatasetEntry> all;
    for (std::size_t i = 0; i < files.size(); ++i) {
        Rng rng = Rng::derive(seed, i);
        AtmosphericLight a;
        for (std::size_t c = 0; c < 3; ++c) a[c] = rng.uniform(0.7, 1.0);
        RainParams p = params;
        p.seed = rng.next();
        all.push_back({files[i].stem().string(), synthesize_pair(load_image(files[i].string()), p, a), p.seed});
    }

    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    Rng(seed).shuffle(order.begin(), order.end());
    const auto n_train = static_cast<std::size_t>(std::llround(split_ratio * static_cast<double>(all.size())));
    Dataset ds;
    for (std::size_t k = 0; k < order.size(); ++k) (k < n_train ? ds.train : ds.test).push_back(all[order[k]]);
    return ds;
}

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
    std::string out = "id,rainy,clean,a_r,a_g,a_b,seed,split,transmission\n";
    for (const auto& r : rows) {
        for (const std::string* f : {&r.id, &r.rainy, &r.clean, &r.split, &r.transmission})
            if (f->find_first_of(",\n\r") != std::string::npos)
                throw ConfigError("manifest: field '" + *f + "' contains a comma or newline");
        out += r.id + ',' + r.rainy + ',' + r.clean + ',' + fmt(r.light[0]) + ',' + fmt(r.light[1]) + ',' +
               fmt(r.light[2]) + ',' + std::to_string(r.seed) + ',' + r.split + ',' + r.transmission + '\n';
    }
    write_file(path, out);
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw FormatError("manifest '" + path + "' is empty");
    const auto header = split_csv_line(line);
    if (header.size() != 9 || header[0] != "id" || header[1] != "rainy" || header[2] != "clean")
        throw FormatError("manifest '" + path + "': unexpected header");
    std::vector<ManifestRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != 9) throw FormatError("manifest '" + path + "' line " + std::to_string(lineno) + ": expected 9 fields");
        ManifestRow r;
        r.id = f[0];
        r.rainy = f[1];
        r.clean = f[2];
        for (std::size_t c = 0; c < 3; ++c) r.light[c] = parse_double(f[3 + c], "light component");
        auto [end, ec] = std::from_chars(f[6].data(), f[6].data() + f[6].size(), r.seed);
        if (ec != std::errc() || end != f[6].data() + f[6].size())
            throw FormatError("manifest '" + path + "' line " + std::to_string(lineno) + ": bad seed");
        r.split = f[7];
        r.transmission = f[8];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<SamplePair> load_pairs(const std::string& manifest_path, std::string_view split) {
    const fs::path base = fs::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };
    std::vector<SamplePair> out;
    for (const auto& r : read_manifest(manifest_path)) {
        if (!split.empty() && r.split != split) continue;
        SamplePair p;
        p.rainy = load_image(resolve(r.rainy));
        p.clean = load_image(resolve(r.clean));
        if (p.rainy.height() != p.clean.height() || p.rainy.width() != p.clean.width())
            throw FormatError("manifest row '" + r.id + "': rainy and clean sizes differ");
        p.light = r.light;
        if (!r.transmission.empty()) p.transmission = load_transmission(resolve(r.transmission));
        out.push_back(std::move(p));
    }
    return out;
}

std::string write_dataset(const Dataset& ds, const std::string& out_dir) {
    const fs::path root(out_dir);
    std::error_code ec;
    for (const char* sub : {"rainy", "clean", "transmission"}) {
        fs::create_directories(root / sub, ec);
        if (ec) throw IoError("cannot create '" + (root / sub).string() + "': " + ec.message());
    }
    std::vector<ManifestRow> rows;
    auto emit = [&](const std::vector<DatasetEntry>& entries, const char* split) {
        for (const auto& e : entries) {
            ManifestRow r;
            r.id = e.id;
            r.rainy = "rainy/" + e.id + ".ppm";
            r.clean = "clean/" + e.id + ".ppm";
            r.light = e.pair.light.value_or(AtmosphericLight{});
            r.seed = e.seed;
            r.split = split;
            save_image(e.pair.rainy, (root / r.rainy).string());
            save_image(e.pair.clean, (root / r.clean).string());
            if (e.pair.transmission) {
                r.transmission = "transmission/" + e.id + ".tmap";
                save_transmission(*e.pair.transmission, (root / r.transmission).string());
            }
            rows.push_back(std::move(r));
        }
    };
    emit(ds.train, "train");
    emit(ds.test, "test");
    const std::string manifest = (root / "manifest.csv").string();
    write_manifest(manifest, rows);
    return manifest;
}

}  // namespace demonet::io
