#include <algorithm>
#include <cmath>
#include <limits>

#include "selfstereo/crf.hpp"
#include "selfstereo/error.hpp"

namespace selfstereo {
namespace {

// Min-convolution of h with the pairwise term at edge weight w; result is
// normalized by subtracting min(h).
void transfer(const double* h, double* out, int dmax, double w, const PairwiseModel& pw) {
    double hmin = h[0];
    for (int d = 1; d < dmax; ++d) hmin = std::min(hmin, h[d]);
    if (pw.truncation == Truncation::potts_like) {
        const double jump = hmin + w;
        for (int d = 0; d < dmax; ++d) {
            double m = h[d];
            if (d > 0) m = std::min(m, h[d - 1] + pw.p1);
            if (d + 1 < dmax) m = std::min(m, h[d + 1] + pw.p1);
            out[d] = std::min(m, jump) - hmin;
        }
        return;
    }
    const double s = pw.p2_base > 0.0 ? w / pw.p2_base : 0.0;
    const double slope = s * pw.p1;
    const double cap = hmin + s * pw.tau;
    for (int d = 0; d < dmax; ++d) out[d] = h[d];
    for (int d = 1; d < dmax; ++d) out[d] = std::min(out[d], out[d - 1] + slope);
    for (int d = dmax - 2; d >= 0; --d) out[d] = std::min(out[d], out[d + 1] + slope);
    for (int d = 0; d < dmax; ++d) out[d] = std::min(out[d], cap) - hmin;
}

// One scanline: pixels[k] are linear pixel indices, weights[k] the edge weight
// between pixels[k] and pixels[k + 1].
void aggregate_scanline(const CostVolume& cost, const std::vector<std::size_t>& pixels,
                        const std::vector<double>& weights, const PairwiseModel& pw,
                        std::vector<double>& sum, std::vector<double>& msg, std::vector<double>& h) {
    const int dmax = cost.d_max;
    std::fill(msg.begin(), msg.end(), 0.0);
    for (std::size_t k = 1; k < pixels.size(); ++k) {
        const double* prev_cost = cost.cost.data() + pixels[k - 1] * dmax;
        for (int d = 0; d < dmax; ++d) h[d] = msg[d] + prev_cost[d];
        transfer(h.data(), msg.data(), dmax, weights[k - 1], pw);
        double* s = sum.data() + pixels[k] * dmax;
        for (int d = 0; d < dmax; ++d) s[d] += msg[d];
    }
}

}  // namespace

CostVolume aggregate_sgm(const CostVolume& cost, const PairwiseModel& pw, const Image& guide,
                         const SgmDirections& dirs) {
    pw.validate();
    if (guide.width != cost.width || guide.height != cost.height)
        throw UsageError("sgm: guide and cost volume sizes differ");
    const int w = cost.width;
    const int h = cost.height;
    const EdgeWeights e = edge_weights(guide, pw);
    std::vector<double> sum(cost.cost.size(), 0.0);
    std::vector<double> msg(cost.d_max), tmp(cost.d_max);
    std::vector<std::size_t> pixels;
    std::vector<double> weights;

    auto run = [&](bool reverse) {
        if (reverse) {
            std::reverse(pixels.begin(), pixels.end());
            std::reverse(weights.begin(), weights.end());
        }
        aggregate_scanline(cost, pixels, weights, pw, sum, msg, tmp);
    };

    for (int pass = 0; pass < 2; ++pass) {
        const bool enabled = pass == 0 ? dirs.left_to_right : dirs.right_to_left;
        if (!enabled) continue;
        for (int y = 0; y < h; ++y) {
            pixels.clear();
            weights.clear();
            for (int x = 0; x < w; ++x) pixels.push_back(static_cast<std::size_t>(y) * w + x);
            for (int x = 0; x + 1 < w; ++x) weights.push_back(e.right_of(x, y));
            run(pass == 1);
        }
    }
    for (int pass = 0; pass < 2; ++pass) {
        const bool enabled = pass == 0 ? dirs.top_to_bottom : dirs.bottom_to_top;
        if (!enabled) continue;
        for (int x = 0; x < w; ++x) {
            pixels.clear();
            weights.clear();
            for (int y = 0; y < h; ++y) pixels.push_back(static_cast<std::size_t>(y) * w + x);
            for (int y = 0; y + 1 < h; ++y) weights.push_back(e.below(x, y));
            run(pass == 1);
        }
    }

    CostVolume out = cost;
    for (std::size_t i = 0; i < out.cost.size(); ++i) out.cost[i] += sum[i];
    return out;
}

DisparityMap solve_sgm(const CostVolume& cost, const PairwiseModel& pw, const Image& guide,
                       const SgmDirections& dirs) {
    return solve_wta(aggregate_sgm(cost, pw, guide, dirs));
}

std::vector<int> solve_exact_chain(std::span<const double> unary, int d_max, std::span<const double> weights,
                                   const PairwiseModel& pw) {
    pw.validate();
    if (d_max < 1 || unary.size() % static_cast<std::size_t>(d_max) != 0)
        throw UsageError("exact chain: unary size is not a multiple of d_max");
    const std::size_t n = unary.size() / d_max;
    if (n == 0) return {};
    if (weights.size() + 1 != n) throw UsageError("exact chain: need width - 1 edge weights");

    // best[k][d]: minimal energy of pixels 0..k with pixel k at label d
    std::vector<double> best(unary.begin(), unary.begin() + d_max);
    std::vector<int> back(n * d_max, 0);
    std::vector<double> next(d_max);
    for (std::size_t k = 1; k < n; ++k) {
        for (int d = 0; d < d_max; ++d) {
            double m = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int p = 0; p < d_max; ++p) {
                const double v = best[p] + pw.penalty(d - p, weights[k - 1]);
                if (v < m) {
                    m = v;
                    arg = p;
                }
            }
            next[d] = m + unary[k * d_max + d];
            back[k * d_max + d] = arg;
        }
        best.swap(next);
    }
    std::vector<int> labels(n);
    labels[n - 1] = static_cast<int>(std::min_element(best.begin(), best.end()) - best.begin());
    for (std::size_t k = n - 1; k > 0; --k) labels[k - 1] = back[k * d_max + labels[k]];
    return labels;
}

std::vector<int> solve_exact_chain(const CostVolume& cost, int row, const PairwiseModel& pw, const Image& guide) {
    if (row < 0 || row >= cost.height) throw UsageError("exact chain: row out of range");
    const EdgeWeights e = edge_weights(guide, pw);
    std::vector<double> weights;
    for (int x = 0; x + 1 < cost.width; ++x) weights.push_back(e.right_of(x, row));
    const double* begin = cost.pixel(0, row);
    return solve_exact_chain(std::span<const double>(begin, static_cast<std::size_t>(cost.width) * cost.d_max),
                             cost.d_max, weights, pw);
}

double chain_energy(std::span<const double> unary, int d_max, std::span<const double> weights,
                    const PairwiseModel& pw, std::span<const int> labels) {
    double e = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        e += unary[k * d_max + labels[k]];
        if (k + 1 < labels.size()) e += pw.penalty(labels[k] - labels[k + 1], weights[k]);
    }
    return e;
}

DisparityMap subpixel_refine(const CostVolume& cost, const DisparityMap& labels) {
    if (labels.width != cost.width || labels.height != cost.height)
        throw UsageError("subpixel: labels and cost sizes differ");
    DisparityMap out = labels;
    for (int y = 0; y < cost.height; ++y)
        for (int x = 0; x < cost.width; ++x) {
            if (!labels.is_valid(x, y)) continue;
            const int d = static_cast<int>(labels.at(x, y));
            if (d <= 0 || d >= cost.d_max - 1) continue;
            const double cm = cost.at(x, y, d - 1);
            const double c0 = cost.at(x, y, d);
            const double cp = cost.at(x, y, d + 1);
            const double denom = cm - 2.0 * c0 + cp;
            if (!(denom > 0.0)) continue;
            // clamped in label space
            const double lo = std::nextafter(d - 0.5, static_cast<double>(d));
            const double hi = std::nextafter(d + 0.5, static_cast<double>(d));
            out.at(x, y) = std::clamp(d + (cm - cp) / (2.0 * denom), lo, hi);
        }
    return out;
}

}  // namespace selfstereo
