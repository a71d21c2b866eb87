#pragma once

#include <cstddef>
#include <vector>

namespace selfstereo {

/// Raster of intensities in [0,1], interleaved row-major (pixel-major, then
/// channel).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0);

    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    double at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
    double& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool empty() const { return width == 0 || height == 0; }

    /// Mean over channels; used as the guide intensity for contrast weights.
    double gray(int x, int y) const;

    /// Throws DataError if dimensions, channel count or values are out of range.
    void validate() const;

    bool operator==(const Image&) const = default;
};

/// Rectified pair: epipolar lines are image rows.
struct ImagePair {
    Image left;
    Image right;

    void validate() const;
    int width() const { return left.width; }
    int height() const { return left.height; }
    int channels() const { return left.channels; }

    bool operator==(const ImagePair&) const = default;
};

Image flip_horizontal(const Image& image);

/// Swap roles of the views and mirror both, so that right-reference
/// disparities become ordinary left-reference disparities.
ImagePair mirror_pair(const ImagePair& pair);

Image crop(const Image& image, int x0, int y0, int w, int h);

/// Mean of each 2x2 block; blocks on an odd edge average the pixels present.
Image downscale_half(const Image& image);

}  // namespace selfstereo
