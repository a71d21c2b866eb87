#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "selfstereo/evaluation.hpp"
#include "selfstereo/matching.hpp"
#include "selfstereo/synthgen.hpp"
#include "selfstereo/unary_model.hpp"

namespace selfstereo {

struct TrainingSample {
    std::string id;
    ImagePair pair;
    DisparityMap pseudo_gt;  // integer labels; validity from the consistency filter
};

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

struct TrainConfig {
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int epochs = 10;
    int batch = 4;  // crops per optimizer step
    std::uint64_t seed = 1;
    double softmax_temperature = 1.0;
    int crop_h = 64;  // 0 = whole image
    int crop_w = 128;
    int crops_per_sample = 1;  // per epoch
    int jobs = 1;

    void validate() const;
};

struct TrainResult {
    UnaryModel model;
    std::vector<double> epoch_loss;  // mean crop loss per epoch
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Mini-batch training of the unary model on (pseudo-)labels. Each epoch draws
/// crops_per_sample random crops per sample in a seeded shuffled order; labels
/// whose match falls left of a crop are masked out. Per-crop gradients are
/// reduced in crop order, so results do not depend on `jobs`.
TrainResult train_epochs(const UnaryModel& model, const std::vector<TrainingSample>& samples,
                         const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct SelfTrainConfig {
    int iterations = 2;
    TrainConfig train;
    MatchConfig match;
    bool filter_enabled = true;
    std::optional<std::filesystem::path> output_dir;  // checkpoints + run_log.jsonl
    bool resume = false;
    int jobs = 1;

    void validate() const;
};

struct PseudoLabelStats {
    std::size_t pairs_used = 0;
    std::size_t pairs_skipped = 0;
    double survivor_fraction = 0.0;  // over all pixels of all pairs
};

/// Runs the current model on every pair, filters with the left-right check
/// (unless disabled) and keeps the integer labels. Pairs with no survivors are
/// skipped with a warning on stderr.
std::vector<TrainingSample> generate_pseudo_labels(const std::vector<CorpusItem>& corpus, const UnaryModel& model,
                                                   const SelfTrainConfig& cfg, PseudoLabelStats* stats = nullptr);

/// Consistency-filtered, subpixel predictions for every pair.
std::vector<DisparityMap> predict_corpus(const std::vector<CorpusItem>& corpus, const UnaryModel& model,
                                         const MatchConfig& cfg, int jobs = 1);
std::vector<DisparityMap> predict_corpus_census(const std::vector<CorpusItem>& corpus, int window, int d_max,
                                                const MatchConfig& cfg, int jobs = 1);

using Evaluator = std::function<EvalReport(const UnaryModel&)>;

struct IterationRecord {
    int iteration = 0;  // 0 = bootstrap
    UnaryModel model;
    std::optional<EvalReport> report;
    PseudoLabelStats pseudo;
    std::vector<double> epoch_loss;
    bool resumed = false;
};

/// Alternates pseudo-label generation and retraining, starting from the
/// bootstrap model. With an output directory, model_iter{k}.bin and
/// run_log.jsonl are written there; with `resume`, existing checkpoints are
/// loaded instead of recomputed. Training for iteration k is seeded from
/// (train.seed, k) so resumed and uninterrupted runs agree.
std::vector<IterationRecord> self_train(const std::vector<CorpusItem>& corpus, const UnaryModel& init,
                                        const SelfTrainConfig& cfg, const Evaluator& evaluate = {},
                                        const nlohmann::json& run_header = {});

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int iteration);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace selfstereo
