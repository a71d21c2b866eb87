#pragma once

#include <span>
#include <vector>

#include "selfstereo/cost_volume.hpp"
#include "selfstereo/disparity_map.hpp"
#include "selfstereo/image.hpp"

namespace selfstereo {

enum class Truncation { potts_like, truncated_linear };

/// Fixed pairwise term on 4-connected edges. The contrast-sensitive edge
/// weight is w_ij = max(p1, p2_base * exp(-edge_sensitivity * |I_i - I_j|)).
///  - potts_like:       V(0) = 0, V(+-1) = p1, V(|D| >= 2) = w_ij
///  - truncated_linear: V(D) = (w_ij / p2_base) * min(p1 * |D|, tau)
struct PairwiseModel {
    double p1 = 0.4;
    double p2_base = 2.0;
    double edge_sensitivity = 10.0;
    Truncation truncation = Truncation::potts_like;
    double tau = 2.0;

    void validate() const;
    double edge_weight(double intensity_delta) const;
    double penalty(int label_delta, double weight) const;
};

/// Edge weights from a guide image: horizontal edges (x,y)-(x+1,y) and
/// vertical edges (x,y)-(x,y+1).
struct EdgeWeights {
    int width = 0;
    int height = 0;
    std::vector<double> horizontal;  // (width - 1) * height
    std::vector<double> vertical;    // width * (height - 1)

    double right_of(int x, int y) const { return horizontal[static_cast<std::size_t>(y) * (width - 1) + x]; }
    double below(int x, int y) const { return vertical[static_cast<std::size_t>(y) * width + x]; }
};

EdgeWeights edge_weights(const Image& guide, const PairwiseModel& pw);

struct EnergyBreakdown {
    double unary_total = 0.0;
    double pairwise_total = 0.0;
    double total = 0.0;
};

/// Unary plus pairwise energy of an integer, fully valid labeling.
EnergyBreakdown energy(const CostVolume& cost, const PairwiseModel& pw, const Image& guide,
                       const DisparityMap& labeling);

/// Per-pixel argmin over d, ties to the smallest d.
DisparityMap solve_wta(const CostVolume& cost);

struct SgmDirections {
    bool left_to_right = true;
    bool right_to_left = true;
    bool top_to_bottom = true;
    bool bottom_to_top = true;

    static SgmDirections horizontal_only() { return {true, true, false, false}; }
};

/// Scanline DP aggregation. For each enabled direction r, messages
///   M_r(p, d) = min_d' [ M_r(p - r, d') + C(p - r, d') + V(d - d') ] - min(...)
/// are accumulated, and the result is C(p, d) + sum_r M_r(p, d). Each pixel's
/// own unary is counted once, so a single horizontal pair of directions gives
/// exact min-marginals of the row chain.
CostVolume aggregate_sgm(const CostVolume& cost, const PairwiseModel& pw, const Image& guide,
                         const SgmDirections& dirs = {});

DisparityMap solve_sgm(const CostVolume& cost, const PairwiseModel& pw, const Image& guide,
                       const SgmDirections& dirs = {});

/// Globally optimal labeling of one chain by Viterbi DP. `unary` holds
/// width * d_max costs (pixel-major), `weights` the width - 1 edge weights.
/// Ties resolve to the smallest label.
std::vector<int> solve_exact_chain(std::span<const double> unary, int d_max, std::span<const double> weights,
                                   const PairwiseModel& pw);

std::vector<int> solve_exact_chain(const CostVolume& cost, int row, const PairwiseModel& pw, const Image& guide);

double chain_energy(std::span<const double> unary, int d_max, std::span<const double> weights,
                    const PairwiseModel& pw, std::span<const int> labels);

/// Parabola through (d*-1, d*, d*+1): offset = (c- - c+) / (2 (c- - 2 c0 + c+)),
/// clamped to (-0.5, 0.5). Labels at 0 or d_max - 1, or with a non-convex
/// neighborhood, are returned unrefined. Invalid pixels pass through.
DisparityMap subpixel_refine(const CostVolume& cost, const DisparityMap& labels);

}  // namespace selfstereo
