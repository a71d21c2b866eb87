#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "selfstereo/error.hpp"
#include "selfstereo/loss.hpp"
#include "selfstereo/training.hpp"

namespace selfstereo {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw UsageError("unknown optimizer '" + name + "'");
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw UsageError("learning_rate must be non-negative");
    if (epochs < 1) throw UsageError("epochs must be at least 1");
    if (batch < 1) throw UsageError("batch must be at least 1");
    if (!(softmax_temperature > 0.0)) throw UsageError("softmax temperature must be positive");
    if (crop_h < 0 || crop_w < 0 || crops_per_sample < 1) throw UsageError("invalid crop configuration");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && adam_epsilon > 0.0))
        throw UsageError("invalid Adam parameters");
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

namespace {

struct Crop {
    std::size_t sample = 0;
    int x0 = 0;
    int y0 = 0;
};

struct CropOutcome {
    bool used = false;
    double loss = 0.0;
    ModelGradients grads;
};

class Optimizer {
public:
    Optimizer(const UnaryModel& model, const TrainConfig& cfg)
        : cfg_(cfg), m_(zero_gradients(model)), v_(zero_gradients(model)) {}

    void step(UnaryModel& model, const ModelGradients& g) {
        ++t_;
        const double lr = cfg_.learning_rate;
        if (cfg_.optimizer == OptimizerKind::sgd) {
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                update_sgd(model.layers[l].weight, g[l].weight, lr);
                update_sgd(model.layers[l].bias, g[l].bias, lr);
            }
        } else {
            const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
            const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                update_adam(model.layers[l].weight, g[l].weight, m_[l].weight, v_[l].weight, lr, c1, c2);
                update_adam(model.layers[l].bias, g[l].bias, m_[l].bias, v_[l].bias, lr, c1, c2);
            }
        }
        model.quantize_to_storage();
    }

private:
    static void update_sgd(std::vector<double>& p, const std::vector<double>& g, double lr) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    }

    void update_adam(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                     std::vector<double>& v, double lr, double c1, double c2) const {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.adam_epsilon);
        }
    }

    const TrainConfig& cfg_;
    ModelGradients m_;
    ModelGradients v_;
    int t_ = 0;
};

CropOutcome run_crop(const UnaryModel& model, const TrainingSample& sample, const Crop& crop, int cw, int ch,
                     double temperature) {
    CropOutcome out;
    DisparityMap labels = selfstereo::crop(sample.pseudo_gt, crop.x0, crop.y0, cw, ch);
    // a label pointing left of the crop has no correspondence inside it
    for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x)
            if (labels.is_valid(x, y) && labels.at(x, y) > x) labels.set_valid(x, y, false);
    if (labels.valid_count() == 0) return out;
    const ImagePair pair{selfstereo::crop(sample.pair.left, crop.x0, crop.y0, cw, ch),
                         selfstereo::crop(sample.pair.right, crop.x0, crop.y0, cw, ch)};
    const ForwardState state = forward(pair, model);
    const LossResult loss = nll_loss(state.cost, one_hot(labels, model.d_max), temperature);
    out.grads = backward(state, model, loss.adjoint);
    out.loss = loss.loss;
    out.used = true;
    return out;
}

}  // namespace

TrainResult train_epochs(const UnaryModel& model, const std::vector<TrainingSample>& samples,
                         const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    model.validate();
    if (samples.empty()) throw DataError("train_epochs: no training samples");
    for (const auto& s : samples) {
        s.pair.validate();
        if (s.pseudo_gt.width != s.pair.width() || s.pseudo_gt.height != s.pair.height())
            throw DataError("training sample " + s.id + ": label map size differs from images");
        if (s.pair.width() < model.d_max) throw DataError("training sample " + s.id + " narrower than d_max");
    }
    if (cfg.crop_w > 0 && cfg.crop_w < model.d_max) throw UsageError("crop width must be at least d_max");

    TrainResult result{model, {}};
    UnaryModel& current = result.model;
    Optimizer optimizer(current, cfg);
    std::mt19937_64 rng(cfg.seed);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<Crop> crops;
        for (std::size_t s = 0; s < samples.size(); ++s) {
            const int w = samples[s].pair.width();
            const int h = samples[s].pair.height();
            const int cw = cfg.crop_w > 0 ? std::min(cfg.crop_w, w) : w;
            const int ch = cfg.crop_h > 0 ? std::min(cfg.crop_h, h) : h;
            for (int k = 0; k < cfg.crops_per_sample; ++k) {
                const int x0 = std::uniform_int_distribution<int>(0, w - cw)(rng);
                const int y0 = std::uniform_int_distribution<int>(0, h - ch)(rng);
                crops.push_back({s, x0, y0});
            }
        }
        std::shuffle(crops.begin(), crops.end(), rng);

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t start = 0; start < crops.size(); start += cfg.batch) {
            const std::size_t n = std::min<std::size_t>(cfg.batch, crops.size() - start);
            std::vector<CropOutcome> outcomes(n);
            parallel_for(n, cfg.jobs, [&](std::size_t i) {
                const Crop& c = crops[start + i];
                const auto& s = samples[c.sample];
                const int cw = cfg.crop_w > 0 ? std::min(cfg.crop_w, s.pair.width()) : s.pair.width();
                const int ch = cfg.crop_h > 0 ? std::min(cfg.crop_h, s.pair.height()) : s.pair.height();
                outcomes[i] = run_crop(current, s, c, cw, ch, cfg.softmax_temperature);
            });

            ModelGradients total = zero_gradients(current);
            std::size_t used = 0;
            for (const auto& o : outcomes) {
                if (!o.used) continue;
                if (!std::isfinite(o.loss)) {
                    std::ostringstream msg;
                    msg << "non-finite training loss at epoch " << epoch << ", step " << start / cfg.batch;
                    throw NumericalError(msg.str());
                }
                accumulate(total, o.grads);
                loss_sum += o.loss;
                ++loss_count;
                ++used;
            }
            if (used == 0) continue;
            scale(total, 1.0 / static_cast<double>(used));
            optimizer.step(current, total);
            if (!current.all_finite())
                throw NumericalError("parameters diverged at epoch " + std::to_string(epoch));
        }
        const double mean = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
        result.epoch_loss.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
    }
    return result;
}

}  // namespace selfstereo
