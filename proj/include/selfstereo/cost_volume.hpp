#pragma once

#include <cstddef>
#include <vector>

#include "selfstereo/image.hpp"

namespace selfstereo {

/// Matching cost per (pixel, disparity), lower is better. Layout is
/// pixel-major with disparity contiguous: ((y * width) + x) * d_max + d.
struct CostVolume {
    int width = 0;
    int height = 0;
    int d_max = 0;
    std::vector<double> cost;

    CostVolume() = default;
    CostVolume(int w, int h, int d, double fill = 0.0)
        : width(w), height(h), d_max(d), cost(static_cast<std::size_t>(w) * h * d, fill) {}

    std::size_t index(int x, int y, int d) const {
        return (static_cast<std::size_t>(y) * width + x) * d_max + d;
    }
    double at(int x, int y, int d) const { return cost[index(x, y, d)]; }
    double& at(int x, int y, int d) { return cost[index(x, y, d)]; }
    const double* pixel(int x, int y) const { return cost.data() + index(x, y, 0); }
    double* pixel(int x, int y) { return cost.data() + index(x, y, 0); }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool same_shape(const CostVolume& o) const {
        return width == o.width && height == o.height && d_max == o.d_max;
    }
    bool all_finite() const;

    bool operator==(const CostVolume&) const = default;
};

/// Entries (x, d) with x - d < 0 have no correspondence in the other view.
/// They are set to the largest in-bounds cost of that pixel (d = 0 is always
/// in bounds), which keeps solvers and the softmax finite.
void fill_out_of_bounds(CostVolume& volume);

/// Index of the largest in-bounds cost at pixel x (ties to smallest d): the
/// entry that out-of-bounds slots copy.
int worst_in_bounds(const CostVolume& volume, int x, int y);

CostVolume flip_horizontal(const CostVolume& volume);

/// Census bit strings (neighbor < center, center excluded) of the channel
/// mean, window clamped at the image border. Returns words_per_pixel words per
/// pixel.
struct CensusImage {
    int width = 0;
    int height = 0;
    int words_per_pixel = 0;
    std::vector<unsigned long long> bits;
};

CensusImage census_transform(const Image& image, int window);

/// Hamming distance between left census at x and right census at x - d.
CostVolume census_cost_volume(const ImagePair& pair, int window, int d_max);

/// Same costs with the right view as reference: match right x with left x + d.
CostVolume census_cost_volume_right(const ImagePair& pair, int window, int d_max);

}  // namespace selfstereo
