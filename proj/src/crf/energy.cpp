#include <cmath>
#include <string>

#include "selfstereo/crf.hpp"
#include "selfstereo/error.hpp"

namespace selfstereo {

void PairwiseModel::validate() const {
    if (!(p1 >= 0.0) || !(p2_base >= p1)) throw UsageError("pairwise model needs 0 <= p1 <= p2_base");
    if (!(edge_sensitivity >= 0.0)) throw UsageError("edge_sensitivity must be non-negative");
    if (truncation == Truncation::truncated_linear && !(tau >= 0.0)) throw UsageError("tau must be non-negative");
}

double PairwiseModel::edge_weight(double intensity_delta) const {
    return std::max(p1, p2_base * std::exp(-edge_sensitivity * std::abs(intensity_delta)));
}

double PairwiseModel::penalty(int label_delta, double weight) const {
    const int a = std::abs(label_delta);
    if (a == 0) return 0.0;
    if (truncation == Truncation::potts_like) return a == 1 ? p1 : weight;
    const double s = p2_base > 0.0 ? weight / p2_base : 0.0;
    return s * std::min(p1 * a, tau);
}

EdgeWeights edge_weights(const Image& guide, const PairwiseModel& pw) {
    EdgeWeights e;
    e.width = guide.width;
    e.height = guide.height;
    e.horizontal.resize(static_cast<std::size_t>(std::max(0, guide.width - 1)) * guide.height);
    e.vertical.resize(static_cast<std::size_t>(guide.width) * std::max(0, guide.height - 1));
    for (int y = 0; y < guide.height; ++y)
        for (int x = 0; x + 1 < guide.width; ++x)
            e.horizontal[static_cast<std::size_t>(y) * (guide.width - 1) + x] =
                pw.edge_weight(guide.gray(x, y) - guide.gray(x + 1, y));
    for (int y = 0; y + 1 < guide.height; ++y)
        for (int x = 0; x < guide.width; ++x)
            e.vertical[static_cast<std::size_t>(y) * guide.width + x] =
                pw.edge_weight(guide.gray(x, y) - guide.gray(x, y + 1));
    return e;
}

EnergyBreakdown energy(const CostVolume& cost, const PairwiseModel& pw, const Image& guide,
                       const DisparityMap& labeling) {
    pw.validate();
    if (labeling.width != cost.width || labeling.height != cost.height || guide.width != cost.width ||
        guide.height != cost.height)
        throw UsageError("energy: cost, guide and labeling sizes differ");
    const int w = cost.width;
    const int h = cost.height;
    std::vector<int> label(labeling.pixel_count());
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (!labeling.valid[i]) throw UsageError("energy: labeling has invalid pixels");
        const double v = labeling.disparity[i];
        if (v != std::floor(v) || v < 0 || v >= cost.d_max)
            throw UsageError("energy: label " + std::to_string(v) + " out of range or not an integer");
        label[i] = static_cast<int>(v);
    }
    const EdgeWeights e = edge_weights(guide, pw);
    EnergyBreakdown out;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.unary_total += cost.at(x, y, label[labeling.index(x, y)]);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int l = label[labeling.index(x, y)];
            if (x + 1 < w) out.pairwise_total += pw.penalty(l - label[labeling.index(x + 1, y)], e.right_of(x, y));
            if (y + 1 < h) out.pairwise_total += pw.penalty(l - label[labeling.index(x, y + 1)], e.below(x, y));
        }
    out.total = out.unary_total + out.pairwise_total;
    return out;
}

DisparityMap solve_wta(const CostVolume& cost) {
    DisparityMap out(cost.width, cost.height);
    for (int y = 0; y < cost.height; ++y)
        for (int x = 0; x < cost.width; ++x) {
            const double* c = cost.pixel(x, y);
            int best = 0;
            for (int d = 1; d < cost.d_max; ++d)
                if (c[d] < c[best]) best = d;
            out.at(x, y) = best;
        }
    return out;
}

}  // namespace selfstereo
