#include "selfstereo/image.hpp"

#include <cmath>
#include <string>

#include "selfstereo/disparity_map.hpp"
#include "selfstereo/error.hpp"

namespace selfstereo {

Image::Image(int w, int h, int c, double fill)
    : width(w), height(h), channels(c),
      data(static_cast<std::size_t>(w) * h * c, fill) {}

double Image::gray(int x, int y) const {
    const std::size_t base = index(x, y);
    double sum = 0.0;
    for (int c = 0; c < channels; ++c) sum += data[base + c];
    return sum / channels;
}

void Image::validate() const {
    if (width <= 0 || height <= 0)
        throw DataError("image has degenerate size " + std::to_string(width) + "x" +
                        std::to_string(height));
    if (channels < 1 || channels > 4)
        throw DataError("image channel count " + std::to_string(channels) + " not in 1..4");
    if (data.size() != pixel_count() * channels)
        throw DataError("image data length does not match dimensions");
    for (double v : data)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw DataError("image intensity outside [0,1]");
}

void ImagePair::validate() const {
    left.validate();
    right.validate();
    if (left.width != right.width || left.height != right.height ||
        left.channels != right.channels)
        throw DataError("stereo pair views differ in size or channel count");
}

Image flip_horizontal(const Image& image) {
    Image out(image.width, image.height, image.channels);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < image.channels; ++c)
                out.at(image.width - 1 - x, y, c) = image.at(x, y, c);
    return out;
}

ImagePair mirror_pair(const ImagePair& pair) {
    return {flip_horizontal(pair.right), flip_horizontal(pair.left)};
}

Image crop(const Image& image, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > image.width || y0 + h > image.height)
        throw UsageError("crop window outside image");
    Image out(w, h, image.channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < image.channels; ++c)
                out.at(x, y, c) = image.at(x0 + x, y0 + y, c);
    return out;
}

Image downscale_half(const Image& image) {
    if (image.width < 2 || image.height < 2)
        throw DataError("cannot downscale an image smaller than 2x2");
    const int w = (image.width + 1) / 2;
    const int h = (image.height + 1) / 2;
    Image out(w, h, image.channels);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < image.channels; ++c) {
                double sum = 0.0;
                int n = 0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int sx = 2 * x + dx;
                        const int sy = 2 * y + dy;
                        if (sx < image.width && sy < image.height) {
                            sum += image.at(sx, sy, c);
                            ++n;
                        }
                    }
                out.at(x, y, c) = sum / n;
            }
        }
    }
    return out;
}

DisparityMap::DisparityMap(int w, int h, double fill, bool is_valid)
    : width(w), height(h),
      disparity(static_cast<std::size_t>(w) * h, fill),
      valid(static_cast<std::size_t>(w) * h, is_valid ? 1 : 0) {}

std::size_t DisparityMap::valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v ? 1 : 0;
    return n;
}

DisparityMap flip_horizontal(const DisparityMap& map) {
    DisparityMap out(map.width, map.height);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            const auto src = map.index(x, y);
            const auto dst = out.index(map.width - 1 - x, y);
            out.disparity[dst] = map.disparity[src];
            out.valid[dst] = map.valid[src];
        }
    return out;
}

DisparityMap crop(const DisparityMap& map, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > map.width || y0 + h > map.height)
        throw UsageError("crop window outside disparity map");
    DisparityMap out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            out.disparity[out.index(x, y)] = map.at(x0 + x, y0 + y);
            out.valid[out.index(x, y)] = map.valid[map.index(x0 + x, y0 + y)];
        }
    return out;
}

}  // namespace selfstereo
