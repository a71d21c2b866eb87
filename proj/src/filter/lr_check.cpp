#include "selfstereo/lr_check.hpp"

#include <cmath>

#include "selfstereo/error.hpp"

namespace selfstereo {

void ConsistencyConfig::validate() const {
    if (!(epsilon > 0.0)) throw UsageError("consistency epsilon must be positive");
}

DisparityMap lr_check(const DisparityMap& d_l, const DisparityMap& d_r, const ConsistencyConfig& cfg) {
    cfg.validate();
    if (!d_l.same_shape(d_r)) throw DataError("lr_check: disparity maps differ in size");
    DisparityMap out = d_l;
    for (int y = 0; y < d_l.height; ++y)
        for (int x = 0; x < d_l.width; ++x) {
            if (!d_l.is_valid(x, y)) continue;
            const double d = d_l.at(x, y);
            const long xr = std::lround(x - d);
            const bool ok = xr >= 0 && xr < d_l.width && d_r.is_valid(static_cast<int>(xr), y) &&
                            std::abs(d - d_r.at(static_cast<int>(xr), y)) < cfg.epsilon;
            out.set_valid(x, y, ok);
        }
    return out;
}

SurvivorStats survivor_stats(const DisparityMap& filtered) {
    SurvivorStats s;
    s.count = filtered.valid_count();
    s.fraction = filtered.pixel_count() ? static_cast<double>(s.count) / filtered.pixel_count() : 0.0;
    return s;
}

}  // namespace selfstereo
