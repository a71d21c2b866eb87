#pragma once

#include <cstdint>
#include <vector>

#include "selfstereo/cost_volume.hpp"
#include "selfstereo/disparity_map.hpp"

namespace selfstereo {

/// One-hot target f*_{i,d} = [d == label_i] on masked-in pixels.
struct OneHotTarget {
    int width = 0;
    int height = 0;
    int d_max = 0;
    std::vector<int> label;          // meaningful where mask is set
    std::vector<std::uint8_t> mask;  // 1 = contributes to the loss

    double value(std::size_t pixel, int d) const { return mask[pixel] && label[pixel] == d ? 1.0 : 0.0; }
    std::size_t valid_count() const;
};

/// Throws DataError for a valid label that is not an integer in [0, d_max).
OneHotTarget one_hot(const DisparityMap& pseudo_gt, int d_max);

struct LossResult {
    double loss = 0.0;
    CostVolume adjoint;  // d loss / d cost
};

/// p_{i,d} = softmax_d(-cost(i,d) / temperature);
/// loss = -(1/|valid|) sum_valid log p_{i,d*}. The adjoint is
/// (onehot - p) / (temperature * |valid|) on valid pixels, zero elsewhere.
LossResult nll_loss(const CostVolume& cost, const OneHotTarget& target, double temperature = 1.0);

/// The same loss written as -(1/|valid|) sum_i sum_d f*_{i,d} log p_{i,d}.
double nll_loss_double_sum(const CostVolume& cost, const OneHotTarget& target, double temperature = 1.0);

}  // namespace selfstereo
