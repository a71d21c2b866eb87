#include <cstdio>
#include <fstream>
#include <iostream>

#include "selfstereo/error.hpp"
#include "selfstereo/training.hpp"

namespace selfstereo {
namespace {

nlohmann::json config_json(const SelfTrainConfig& cfg) {
    const auto& t = cfg.train;
    const auto& pw = cfg.match.pairwise;
    return {{"iterations", cfg.iterations},
            {"filter_enabled", cfg.filter_enabled},
            {"epsilon", cfg.match.filter.epsilon},
            {"solver", to_string(cfg.match.solver)},
            {"pairwise",
             {{"p1", pw.p1},
              {"p2_base", pw.p2_base},
              {"edge_sensitivity", pw.edge_sensitivity},
              {"truncation", pw.truncation == Truncation::potts_like ? "potts-like" : "truncated-linear"},
              {"tau", pw.tau}}},
            {"train",
             {{"learning_rate", t.learning_rate},
              {"optimizer", to_string(t.optimizer)},
              {"beta1", t.beta1},
              {"beta2", t.beta2},
              {"adam_epsilon", t.adam_epsilon},
              {"epochs", t.epochs},
              {"batch", t.batch},
              {"seed", t.seed},
              {"softmax_temperature", t.softmax_temperature},
              {"crop_h", t.crop_h},
              {"crop_w", t.crop_w},
              {"crops_per_sample", t.crops_per_sample}}}};
}

class RunLog {
public:
    RunLog(const std::optional<std::filesystem::path>& dir, bool append) {
        if (!dir) return;
        out_.open(*dir / "run_log.jsonl", append ? std::ios::app : std::ios::trunc);
        if (!out_) throw DataError("cannot write run log in " + dir->string());
    }

    void write(const nlohmann::json& event) {
        if (!out_.is_open()) return;
        out_ << event.dump() << "\n";
        out_.flush();
    }

private:
    std::ofstream out_;
};

}  // namespace

void SelfTrainConfig::validate() const {
    if (iterations < 1) throw UsageError("iterations must be at least 1");
    train.validate();
    match.pairwise.validate();
    match.filter.validate();
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int iteration) {
    return dir / ("model_iter" + std::to_string(iteration) + ".bin");
}

std::vector<TrainingSample> generate_pseudo_labels(const std::vector<CorpusItem>& corpus, const UnaryModel& model,
                                                   const SelfTrainConfig& cfg, PseudoLabelStats* stats) {
    std::vector<MatchResult> results(corpus.size());
    parallel_for(corpus.size(), cfg.jobs,
                 [&](std::size_t i) { results[i] = match_with_model(corpus[i].pair, model, cfg.match); });

    std::vector<TrainingSample> samples;
    PseudoLabelStats local;
    std::size_t survivors = 0;
    std::size_t pixels = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        DisparityMap labels = cfg.filter_enabled ? std::move(results[i].consistent) : std::move(results[i].left);
        const std::size_t n = labels.valid_count();
        survivors += n;
        pixels += labels.pixel_count();
        if (n == 0) {
            std::cerr << "warning: pair " << corpus[i].id << " has no surviving pixels; skipped\n";
            ++local.pairs_skipped;
            continue;
        }
        samples.push_back({corpus[i].id, corpus[i].pair, std::move(labels)});
        ++local.pairs_used;
    }
    local.survivor_fraction = pixels ? static_cast<double>(survivors) / static_cast<double>(pixels) : 0.0;
    if (stats) *stats = local;
    return samples;
}

std::vector<DisparityMap> predict_corpus(const std::vector<CorpusItem>& corpus, const UnaryModel& model,
                                         const MatchConfig& cfg, int jobs) {
    std::vector<DisparityMap> out(corpus.size());
    parallel_for(corpus.size(), jobs,
                 [&](std::size_t i) { out[i] = match_with_model(corpus[i].pair, model, cfg).prediction; });
    return out;
}

std::vector<DisparityMap> predict_corpus_census(const std::vector<CorpusItem>& corpus, int window, int d_max,
                                                const MatchConfig& cfg, int jobs) {
    std::vector<DisparityMap> out(corpus.size());
    parallel_for(corpus.size(), jobs,
                 [&](std::size_t i) { out[i] = match_with_census(corpus[i].pair, window, d_max, cfg).prediction; });
    return out;
}

std::vector<IterationRecord> self_train(const std::vector<CorpusItem>& corpus, const UnaryModel& init,
                                        const SelfTrainConfig& cfg, const Evaluator& evaluate,
                                        const nlohmann::json& run_header) {
    cfg.validate();
    init.validate();
    if (corpus.empty()) throw DataError("self_train: corpus is empty");
    if (cfg.output_dir) std::filesystem::create_directories(*cfg.output_dir);
    RunLog log(cfg.output_dir, cfg.resume);
    log.write({{"event", "config"}, {"header", run_header}, {"config", config_json(cfg)}, {"resume", cfg.resume}});

    std::vector<IterationRecord> records;
    IterationRecord boot;
    boot.iteration = 0;
    boot.model = init;
    if (cfg.output_dir) save_checkpoint(init, checkpoint_path(*cfg.output_dir, 0));
    if (evaluate) boot.report = evaluate(init);
    log.write({{"event", "eval"}, {"iteration", 0}, {"report", boot.report ? to_json(*boot.report) : nlohmann::json()}});
    records.push_back(std::move(boot));

    for (int k = 1; k <= cfg.iterations; ++k) {
        IterationRecord rec;
        rec.iteration = k;
        const UnaryModel& previous = records.back().model;
        const auto path = cfg.output_dir ? std::optional(checkpoint_path(*cfg.output_dir, k)) : std::nullopt;
        if (cfg.resume && path && std::filesystem::exists(*path)) {
            rec.model = load_checkpoint(*path);
            rec.resumed = true;
            log.write({{"event", "resumed"}, {"iteration", k}, {"checkpoint", path->filename().string()}});
        } else {
            std::vector<TrainingSample> samples = generate_pseudo_labels(corpus, previous, cfg, &rec.pseudo);
            log.write({{"event", "pseudo_labels"},
                       {"iteration", k},
                       {"survivor_fraction", rec.pseudo.survivor_fraction},
                       {"pairs_used", rec.pseudo.pairs_used},
                       {"pairs_skipped", rec.pseudo.pairs_skipped}});
            if (samples.empty()) throw DataError("iteration " + std::to_string(k) + ": no pseudo-labels survived");
            TrainConfig tc = cfg.train;
            tc.seed = derive_seed(cfg.train.seed, static_cast<std::uint64_t>(k));
            tc.jobs = cfg.jobs;
            TrainResult trained = train_epochs(previous, samples, tc, [&](int epoch, double loss) {
                log.write({{"event", "epoch"}, {"iteration", k}, {"epoch", epoch}, {"loss", loss}});
            });
            rec.model = std::move(trained.model);
            rec.epoch_loss = std::move(trained.epoch_loss);
            if (path) save_checkpoint(rec.model, *path);
        }
        if (evaluate) rec.report = evaluate(rec.model);
        log.write({{"event", "eval"}, {"iteration", k}, {"report", rec.report ? to_json(*rec.report) : nlohmann::json()}});
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace selfstereo
