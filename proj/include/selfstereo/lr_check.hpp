#pragma once

#include <cstddef>

#include "selfstereo/disparity_map.hpp"

namespace selfstereo {

struct ConsistencyConfig {
    double epsilon = 0.9;

    void validate() const;
};

/// Left-right consistency filter. Both maps hold non-negative disparity
/// magnitudes (d_l maps left x to right x - d_l, d_r maps right x to left
/// x + d_r). Pixel x survives iff xr = round(x - d_l(x)) lies in the image,
/// d_r(xr) is valid and |d_l(x) - d_r(xr)| < epsilon. Output copies d_l with
/// the surviving mask; pixels invalid in d_l stay invalid.
DisparityMap lr_check(const DisparityMap& d_l, const DisparityMap& d_r, const ConsistencyConfig& cfg = {});

struct SurvivorStats {
    double fraction = 0.0;
    std::size_t count = 0;
};

SurvivorStats survivor_stats(const DisparityMap& filtered);

}  // namespace selfstereo
