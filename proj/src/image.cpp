#include "demonet/image.hpp"

#include <algorithm>
#include <string>

#include "demonet/error.hpp"

namespace demonet {

Image::Image(std::size_t height, std::size_t width, std::vector<double> samples)
    : h_(height), w_(width), px_(std::move(samples)) {
    if (px_.size() != h_ * w_ * 3) throw ShapeError("image sample count does not match " + std::to_string(h_) + "x" +
                                                    std::to_string(w_) + "x3");
}

Image Image::filled(std::size_t height, std::size_t width, std::array<double, 3> rgb) {
    Image img(height, width);
    for (std::size_t i = 0; i < img.pixels(); ++i)
        for (std::size_t c = 0; c < 3; ++c) img.px_[i * 3 + c] = rgb[c];
    return img;
}

void Image::clip01() {
    for (double& v : px_) v = std::clamp(v, 0.0, 1.0);
}

ad::Tensor images_to_tensor(std::span<const Image> images) {
    if (images.empty()) throw ShapeError("images_to_tensor: empty batch");
    const std::size_t h = images[0].height(), w = images[0].width();
    ad::Tensor t(ad::Shape{images.size(), 3, h, w});
    for (std::size_t n = 0; n < images.size(); ++n) {
        const Image& img = images[n];
        if (img.height() != h || img.width() != w) throw ShapeError("images_to_tensor: images differ in size");
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) t.at(n, c, y, x) = img.at(y, x, c);
    }
    return t;
}

ad::Tensor image_to_tensor(const Image& image) { return images_to_tensor(std::span<const Image>(&image, 1)); }

Image image_from_tensor(const ad::Tensor& t, std::size_t index) {
    if (t.shape().rank() != 4 || t.dim(1) != 3 || index >= t.dim(0))
        throw ShapeError("image_from_tensor: expected (N, 3, H, W), got " + t.shape().str());
    const std::size_t h = t.dim(2), w = t.dim(3);
    Image img(h, w);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) img.at(y, x, c) = t.at(index, c, y, x);
    return img;
}

ad::Tensor transmission_to_tensor(std::span<const TransmissionMap> maps) {
    if (maps.empty()) throw ShapeError("transmission_to_tensor: empty batch");
    const std::size_t h = maps[0].height(), w = maps[0].width();
    ad::Tensor t(ad::Shape{maps.size(), 1, h, w});
    for (std::size_t n = 0; n < maps.size(); ++n) {
        if (maps[n].height() != h || maps[n].width() != w) throw ShapeError("transmission maps differ in size");
        std::copy(maps[n].values().begin(), maps[n].values().end(), t.data().begin() + n * h * w);
    }
    return t;
}

TransmissionMap transmission_from_tensor(const ad::Tensor& t, std::size_t index) {
    if (t.shape().rank() != 4 || t.dim(1) != 1 || index >= t.dim(0))
        throw ShapeError("transmission_from_tensor: expected (N, 1, H, W), got " + t.shape().str());
    const std::size_t h = t.dim(2), w = t.dim(3);
    auto first = t.data().begin() + index * h * w;
    return TransmissionMap(h, w, std::vector<double>(first, first + h * w));
}

ad::Tensor lights_to_tensor(std::span<const AtmosphericLight> lights) {
    ad::Tensor t(ad::Shape{lights.size(), 3});
    for (std::size_t n = 0; n < lights.size(); ++n)
        for (std::size_t c = 0; c < 3; ++c) t.data()[n * 3 + c] = lights[n][c];
    return t;
}

AtmosphericLight light_from_tensor(const ad::Tensor& t, std::size_t index) {
    if (t.shape().rank() != 2 || t.dim(1) != 3 || index >= t.dim(0))
        throw ShapeError("light_from_tensor: expected (N, 3), got " + t.shape().str());
    return AtmosphericLight{{t.data()[index * 3], t.data()[index * 3 + 1], t.data()[index * 3 + 2]}};
}

Image crop(const Image& image, std::size_t y0, std::size_t x0, std::size_t height, std::size_t width) {
    if (y0 + height > image.height() || x0 + width > image.width()) throw ShapeError("crop window outside image");
    Image out(height, width);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y0 + y, x0 + x, c);
    return out;
}

}  // namespace demonet
