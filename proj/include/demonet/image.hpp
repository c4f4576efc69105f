#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "demonet/error.hpp"
#include "demonet/tensor.hpp"

namespace demonet {

/// H x W x 3 image with interleaved RGB samples, nominally in [0, 1].
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, double fill = 0.0)
        : h_(height), w_(width), px_(height * width * 3, fill) {}
    Image(std::size_t height, std::size_t width, std::vector<double> samples);

    static Image filled(std::size_t height, std::size_t width, std::array<double, 3> rgb);

    std::size_t height() const { return h_; }
    std::size_t width() const { return w_; }
    std::size_t pixels() const { return h_ * w_; }
    bool empty() const { return px_.empty(); }

    double& at(std::size_t y, std::size_t x, std::size_t c) { return px_[(y * w_ + x) * 3 + c]; }
    double at(std::size_t y, std::size_t x, std::size_t c) const { return px_[(y * w_ + x) * 3 + c]; }

    std::span<double> samples() { return px_; }
    std::span<const double> samples() const { return px_; }

    void clip01();

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t h_ = 0, w_ = 0;
    std::vector<double> px_;
};

/// Single-channel H x W field. The tag keeps transmission, optical depth and
/// plain gray maps from being mixed up.
template <class T, class Tag>
class Plane {
public:
    using value_type = T;

    Plane() = default;
    Plane(std::size_t height, std::size_t width, T fill = T{}) : h_(height), w_(width), v_(height * width, fill) {}
    Plane(std::size_t height, std::size_t width, std::vector<T> values) : h_(height), w_(width), v_(std::move(values)) {
        if (v_.size() != h_ * w_) throw ShapeError("plane value count does not match its dimensions");
    }

    std::size_t height() const { return h_; }
    std::size_t width() const { return w_; }
    std::size_t size() const { return v_.size(); }

    T& at(std::size_t y, std::size_t x) { return v_[y * w_ + x]; }
    const T& at(std::size_t y, std::size_t x) const { return v_[y * w_ + x]; }

    std::span<T> values() { return v_; }
    std::span<const T> values() const { return v_; }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    std::size_t h_ = 0, w_ = 0;
    std::vector<T> v_;
};

struct TransmissionTag {};
struct OpticalDepthTag {};
struct GrayTag {};
struct RainMaskTag {};

/// Per-pixel medium transmission in (0, 1], broadcast over RGB.
using TransmissionMap = Plane<double, TransmissionTag>;
/// Integrated scattering coefficient along each ray, >= 0.
using OpticalDepthMap = Plane<double, OpticalDepthTag>;
using GrayMap = Plane<double, GrayTag>;
/// 1 marks a pixel classified as rain.
using RainMask = Plane<std::uint8_t, RainMaskTag>;

/// Global atmospheric light, one value per RGB channel.
struct AtmosphericLight {
    std::array<double, 3> rgb{};

    double operator[](std::size_t c) const { return rgb[c]; }
    double& operator[](std::size_t c) { return rgb[c]; }
    friend bool operator==(const AtmosphericLight&, const AtmosphericLight&) = default;
};

/// Stacks images of identical size into an N x 3 x H x W tensor.
ad::Tensor images_to_tensor(std::span<const Image> images);
ad::Tensor image_to_tensor(const Image& image);
Image image_from_tensor(const ad::Tensor& t, std::size_t index = 0);

/// N x 1 x H x W tensor from transmission maps and back.
ad::Tensor transmission_to_tensor(std::span<const TransmissionMap> maps);
TransmissionMap transmission_from_tensor(const ad::Tensor& t, std::size_t index = 0);

ad::Tensor lights_to_tensor(std::span<const AtmosphericLight> lights);
AtmosphericLight light_from_tensor(const ad::Tensor& t, std::size_t index = 0);

Image crop(const Image& image, std::size_t y0, std::size_t x0, std::size_t height, std::size_t width);

}  // namespace demonet
