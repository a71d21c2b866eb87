#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace selfstereo {

/// Per-pixel disparity magnitude (non-negative, left- or right-reference) with
/// a validity mask. Invalid pixels may still carry a value; it has no meaning
/// to consumers other than tests.
struct DisparityMap {
    int width = 0;
    int height = 0;
    std::vector<double> disparity;
    std::vector<std::uint8_t> valid;

    DisparityMap() = default;
    DisparityMap(int w, int h, double fill = 0.0, bool is_valid = true);

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    double at(int x, int y) const { return disparity[index(x, y)]; }
    double& at(int x, int y) { return disparity[index(x, y)]; }
    bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
    void set_valid(int x, int y, bool v) { valid[index(x, y)] = v ? 1 : 0; }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t valid_count() const;

    bool same_shape(const DisparityMap& other) const {
        return width == other.width && height == other.height;
    }

    bool operator==(const DisparityMap&) const = default;
};

DisparityMap flip_horizontal(const DisparityMap& map);
DisparityMap crop(const DisparityMap& map, int x0, int y0, int w, int h);

}  // namespace selfstereo
