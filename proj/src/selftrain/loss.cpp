#include "selfstereo/loss.hpp"

#include <algorithm>
#include <cmath>

#include "selfstereo/error.hpp"

namespace selfstereo {
namespace {

void check(const CostVolume& cost, const OneHotTarget& target, double temperature) {
    if (cost.width != target.width || cost.height != target.height || cost.d_max != target.d_max)
        throw UsageError("loss: cost volume and target differ in shape");
    if (!(temperature > 0.0)) throw UsageError("loss: temperature must be positive");
    if (target.valid_count() == 0) throw DataError("loss: empty mask");
}

// log-sum-exp of -c/T over d, computed stably
double log_partition(const double* c, int dmax, double inv_t) {
    double zmax = -c[0] * inv_t;
    for (int d = 1; d < dmax; ++d) zmax = std::max(zmax, -c[d] * inv_t);
    double s = 0.0;
    for (int d = 0; d < dmax; ++d) s += std::exp(-c[d] * inv_t - zmax);
    return zmax + std::log(s);
}

}  // namespace

std::size_t OneHotTarget::valid_count() const {
    std::size_t n = 0;
    for (auto m : mask) n += m ? 1 : 0;
    return n;
}

OneHotTarget one_hot(const DisparityMap& pseudo_gt, int d_max) {
    OneHotTarget t;
    t.width = pseudo_gt.width;
    t.height = pseudo_gt.height;
    t.d_max = d_max;
    t.label.assign(pseudo_gt.pixel_count(), 0);
    t.mask.assign(pseudo_gt.pixel_count(), 0);
    for (std::size_t i = 0; i < pseudo_gt.pixel_count(); ++i) {
        if (!pseudo_gt.valid[i]) continue;
        const double v = pseudo_gt.disparity[i];
        if (v != std::floor(v) || v < 0.0 || v >= d_max)
            throw DataError("one_hot: label " + std::to_string(v) + " out of range [0, " + std::to_string(d_max) + ")");
        t.label[i] = static_cast<int>(v);
        t.mask[i] = 1;
    }
    return t;
}

LossResult nll_loss(const CostVolume& cost, const OneHotTarget& target, double temperature) {
    check(cost, target, temperature);
    const int dmax = cost.d_max;
    const double inv_t = 1.0 / temperature;
    const double inv_n = 1.0 / static_cast<double>(target.valid_count());
    LossResult out{0.0, CostVolume(cost.width, cost.height, dmax)};
    double total = 0.0;
    for (std::size_t i = 0; i < cost.pixel_count(); ++i) {
        if (!target.mask[i]) continue;
        const double* c = cost.cost.data() + i * dmax;
        const double lse = log_partition(c, dmax, inv_t);
        const int gt = target.label[i];
        total += lse + c[gt] * inv_t;
        double* g = out.adjoint.cost.data() + i * dmax;
        for (int d = 0; d < dmax; ++d) {
            const double p = std::exp(-c[d] * inv_t - lse);
            g[d] = ((d == gt ? 1.0 : 0.0) - p) * inv_t * inv_n;
        }
    }
    out.loss = total * inv_n;
    if (!std::isfinite(out.loss)) throw NumericalError("loss is not finite");
    return out;
}

double nll_loss_double_sum(const CostVolume& cost, const OneHotTarget& target, double temperature) {
    check(cost, target, temperature);
    const int dmax = cost.d_max;
    const double inv_t = 1.0 / temperature;
    double total = 0.0;
    for (std::size_t i = 0; i < cost.pixel_count(); ++i) {
        if (!target.mask[i]) continue;
        const double* c = cost.cost.data() + i * dmax;
        const double lse = log_partition(c, dmax, inv_t);
        for (int d = 0; d < dmax; ++d) {
            total -= target.value(i, d) * (-c[d] * inv_t - lse);
        }
    }
    return total / static_cast<double>(target.valid_count());
}

}  // namespace selfstereo
