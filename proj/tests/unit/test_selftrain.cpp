#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "selfstereo/error.hpp"
#include "selfstereo/training.hpp"

using namespace selfstereo;

namespace {

CorpusSpec tiny_spec(int pairs) {
    CorpusSpec spec;
    spec.n_pairs = pairs;
    spec.width = 48;
    spec.height = 24;
    spec.d_max = 8;
    spec.min_objects = 1;
    spec.max_objects = 3;
    return spec;
}

ModelSpec tiny_model() { return {1, 6, 2, 3, 8}; }

std::vector<TrainingSample> gt_samples(const std::vector<SyntheticScene>& scenes) {
    std::vector<TrainingSample> out;
    for (std::size_t i = 0; i < scenes.size(); ++i)
        out.push_back({"s" + std::to_string(i), scenes[i].pair, scenes[i].gt_left});
    return out;
}

std::vector<CorpusItem> items(const std::vector<SyntheticScene>& scenes) {
    std::vector<CorpusItem> out;
    for (std::size_t i = 0; i < scenes.size(); ++i) out.push_back({"p" + std::to_string(i), scenes[i].pair});
    return out;
}

TrainConfig quick_train(int epochs) {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.learning_rate = 0.01;
    tc.batch = 2;
    tc.crop_h = 0;
    tc.crop_w = 0;
    return tc;
}

// Cost volume that is zero at the GT label and one elsewhere; uniform where
// the GT is undefined.
CostVolume oracle_cost(const DisparityMap& gt, int d_max) {
    CostVolume v(gt.width, gt.height, d_max, 1.0);
    for (int y = 0; y < gt.height; ++y)
        for (int x = 0; x < gt.width; ++x)
            if (gt.is_valid(x, y)) v.at(x, y, static_cast<int>(gt.at(x, y))) = 0.0;
    return v;
}

}  // namespace

TEST_CASE("a perfect cost reproduces GT on non-occluded pixels") {
    CorpusSpec spec = tiny_spec(5);
    spec.width = 96;
    spec.d_max = 16;
    for (const SyntheticScene& s : generate_corpus(spec, 4)) {
        DisparityMap all = s.gt_left;
        std::fill(all.valid.begin(), all.valid.end(), 1);
        MatchConfig mc;
        mc.solver = SolverKind::wta;
        const MatchResult r = match_volumes(oracle_cost(all, 16), oracle_cost(s.gt_right, 16), s.pair, mc);
        CHECK(r.consistent == s.gt_left);
    }
}

TEST_CASE("census matching recovers a constant noise-free disparity") {
    CorpusSpec spec = tiny_spec(1);
    spec.width = 64;
    spec.noise_sigma = 0.0;
    const SceneLayout layout{{0, 0, 64, 24, 3.0, 0.0, 0.0}};
    const SyntheticScene s = render_scene(spec, layout, 12);
    const CostVolume cost = census_cost_volume(s.pair, 5, 8);
    MatchConfig mc;
    mc.solver = SolverKind::wta;
    const MatchResult wta = match_with_census(s.pair, 5, 8, mc);
    const MatchResult sgm = match_with_census(s.pair, 5, 8, MatchConfig{SolverKind::sgm, census_pairwise(), {}});
    // Columns whose 5x5 windows lie in the warped region of both views.
    std::size_t exact = 0, total = 0;
    for (int y = 0; y < 24; ++y)
        for (int x = 5; x <= 61; ++x) {
            ++total;
            CHECK(cost.at(x, y, 3) == 0.0);
            // WTA returns the GT label unless a smaller label ties at zero cost.
            CHECK((wta.left.at(x, y) == 3.0 || cost.at(x, y, static_cast<int>(wta.left.at(x, y))) == 0.0));
            exact += wta.left.at(x, y) == 3.0;
            CHECK(sgm.left.at(x, y) == 3.0);
            CHECK(sgm.consistent.is_valid(x, y));
        }
    CHECK(exact >= 0.99 * total);
}

TEST_CASE("solver names and census defaults") {
    CHECK(parse_solver("sgm") == SolverKind::sgm);
    CHECK(parse_solver(to_string(SolverKind::wta)) == SolverKind::wta);
    CHECK_THROWS_AS(parse_solver("bp"), UsageError);
    CHECK_NOTHROW(census_pairwise().validate());
    CHECK(parse_optimizer("adam") == OptimizerKind::adam);
    CHECK(parse_optimizer(to_string(OptimizerKind::sgd)) == OptimizerKind::sgd);
    CHECK_THROWS_AS(parse_optimizer("lbfgs"), UsageError);
}

TEST_CASE("zero learning rate leaves the model unchanged") {
    const auto scenes = generate_corpus(tiny_spec(2), 1);
    const UnaryModel m = make_model(tiny_model(), 3);
    for (OptimizerKind opt : {OptimizerKind::sgd, OptimizerKind::adam}) {
        TrainConfig tc = quick_train(3);
        tc.learning_rate = 0.0;
        tc.optimizer = opt;
        const TrainResult r = train_epochs(m, gt_samples(scenes), tc);
        CHECK(r.model == m);
        REQUIRE(r.epoch_loss.size() == 3);
        CHECK(r.epoch_loss[0] == r.epoch_loss[1]);
        CHECK(r.epoch_loss[1] == r.epoch_loss[2]);
    }
}

TEST_CASE("repeated descent on one sample lowers the loss") {
    const auto scenes = generate_corpus(tiny_spec(1), 2);
    TrainConfig tc = quick_train(200);
    tc.batch = 1;
    const TrainResult r = train_epochs(make_model(tiny_model(), 5), gt_samples(scenes), tc);
    CHECK(r.epoch_loss.back() < 0.5 * r.epoch_loss.front());
    for (const auto& l : r.model.layers)
        for (double w : l.weight) CHECK(static_cast<double>(static_cast<float>(w)) == w);
}

TEST_CASE("training is deterministic and independent of the worker count") {
    const auto scenes = generate_corpus(tiny_spec(3), 6);
    TrainConfig tc = quick_train(2);
    tc.crop_h = 16;
    tc.crop_w = 24;
    tc.crops_per_sample = 2;
    tc.batch = 3;
    const UnaryModel m = make_model(tiny_model(), 7);
    const TrainResult a = train_epochs(m, gt_samples(scenes), tc);
    const TrainResult b = train_epochs(m, gt_samples(scenes), tc);
    tc.jobs = 3;
    const TrainResult c = train_epochs(m, gt_samples(scenes), tc);
    CHECK(a.model == b.model);
    CHECK(a.model == c.model);
    CHECK(a.epoch_loss == c.epoch_loss);
    tc.seed = 99;
    CHECK_FALSE(train_epochs(m, gt_samples(scenes), tc).model == a.model);
}

TEST_CASE("training argument checks") {
    const auto scenes = generate_corpus(tiny_spec(1), 2);
    const UnaryModel m = make_model(tiny_model(), 1);
    CHECK_THROWS_AS(train_epochs(m, {}, quick_train(1)), DataError);
    TrainConfig tc = quick_train(0);
    CHECK_THROWS_AS(train_epochs(m, gt_samples(scenes), tc), UsageError);
    tc = quick_train(1);
    tc.crop_w = 4;
    CHECK_THROWS_AS(train_epochs(m, gt_samples(scenes), tc), UsageError);
    auto bad = gt_samples(scenes);
    bad[0].pseudo_gt = DisparityMap(10, 10);
    CHECK_THROWS_AS(train_epochs(m, bad, quick_train(1)), DataError);
    tc = quick_train(1);
    tc.learning_rate = 1e300;
    tc.optimizer = OptimizerKind::sgd;
    CHECK_THROWS_AS(train_epochs(m, gt_samples(scenes), tc), NumericalError);
}

TEST_CASE("pseudo-labels are a filtered subset of the solver output") {
    const auto scenes = generate_corpus(tiny_spec(3), 8);
    const UnaryModel m = train_epochs(make_model(tiny_model(), 2), gt_samples(scenes), quick_train(20)).model;
    SelfTrainConfig cfg;
    PseudoLabelStats stats;
    const auto samples = generate_pseudo_labels(items(scenes), m, cfg, &stats);
    REQUIRE(samples.size() == 3);
    CHECK(stats.pairs_used == 3);
    std::size_t survivors = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const MatchResult r = match_with_model(scenes[i].pair, m, cfg.match);
        CHECK(samples[i].pseudo_gt == r.consistent);
        for (std::size_t p = 0; p < r.left.pixel_count(); ++p) {
            if (!samples[i].pseudo_gt.valid[p]) continue;
            CHECK(samples[i].pseudo_gt.disparity[p] == r.left.disparity[p]);
            CHECK(samples[i].pseudo_gt.disparity[p] == std::floor(samples[i].pseudo_gt.disparity[p]));
        }
        survivors += samples[i].pseudo_gt.valid_count();
    }
    CHECK(stats.survivor_fraction == doctest::Approx(survivors / (3.0 * 48 * 24)));

    cfg.filter_enabled = false;
    const auto raw = generate_pseudo_labels(items(scenes), m, cfg);
    for (const auto& s : raw) CHECK(s.pseudo_gt.valid_count() == s.pseudo_gt.pixel_count());

    CHECK(generate_pseudo_labels({}, m, cfg).empty());
}

TEST_CASE("an untrained model with WTA keeps fewer labels than a pretrained one with SGM") {
    const auto scenes = generate_corpus(tiny_spec(4), 10);
    const UnaryModel random = make_model(tiny_model(), 11);
    const UnaryModel trained = train_epochs(random, gt_samples(scenes), quick_train(30)).model;
    SelfTrainConfig wta;
    wta.match.solver = SolverKind::wta;
    PseudoLabelStats a, b;
    generate_pseudo_labels(items(scenes), random, wta, &a);
    generate_pseudo_labels(items(scenes), trained, SelfTrainConfig{}, &b);
    CHECK(a.survivor_fraction < 0.5 * b.survivor_fraction);
}

TEST_CASE("self-training loop structure, checkpoints and run log") {
    const auto scenes = generate_corpus(tiny_spec(3), 13);
    const UnaryModel init = train_epochs(make_model(tiny_model(), 4), gt_samples(scenes), quick_train(10)).model;
    const auto dir = oracle::temp_dir("selftrain_loop");
    SelfTrainConfig cfg;
    cfg.iterations = 1;
    cfg.train = quick_train(2);
    cfg.output_dir = dir;
    int evaluations = 0;
    const auto records = self_train(items(scenes), init, cfg, [&](const UnaryModel&) {
        ++evaluations;
        return EvalReport{};
    });
    REQUIRE(records.size() == 2);
    CHECK(records[0].iteration == 0);
    CHECK(records[0].model == init);
    CHECK(records[1].iteration == 1);
    CHECK(records[1].epoch_loss.size() == 2);
    CHECK(evaluations == 2);
    CHECK(load_checkpoint(checkpoint_path(dir, 0)) == init);
    CHECK(load_checkpoint(checkpoint_path(dir, 1)) == records[1].model);

    std::ifstream log(dir / "run_log.jsonl");
    std::set<std::string> events;
    std::string line;
    int lines = 0;
    while (std::getline(log, line)) {
        const auto j = nlohmann::json::parse(line);
        events.insert(j["event"].get<std::string>());
        if (j["event"] == "config") CHECK(j["config"]["iterations"] == 1);
        ++lines;
    }
    CHECK(events == std::set<std::string>{"config", "eval", "pseudo_labels", "epoch"});
    CHECK(lines == 1 + 2 + 1 + 2);

    cfg.iterations = 0;
    CHECK_THROWS_AS(self_train(items(scenes), init, cfg), UsageError);
    cfg.iterations = 1;
    CHECK_THROWS_AS(self_train({}, init, cfg), DataError);
}

TEST_CASE("a resumed run matches an uninterrupted one") {
    const auto scenes = generate_corpus(tiny_spec(3), 14);
    const UnaryModel init = train_epochs(make_model(tiny_model(), 4), gt_samples(scenes), quick_train(10)).model;
    SelfTrainConfig cfg;
    cfg.iterations = 2;
    cfg.train = quick_train(2);
    const auto full_dir = oracle::temp_dir("resume_full");
    cfg.output_dir = full_dir;
    const auto full = self_train(items(scenes), init, cfg);

    const auto part_dir = oracle::temp_dir("resume_part");
    cfg.output_dir = part_dir;
    cfg.iterations = 1;
    self_train(items(scenes), init, cfg);
    cfg.iterations = 2;
    cfg.resume = true;
    const auto resumed = self_train(items(scenes), init, cfg);
    CHECK(resumed[1].resumed);
    CHECK_FALSE(resumed[2].resumed);
    CHECK(resumed[2].model == full[2].model);

    auto bytes = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), {});
    };
    CHECK(bytes(checkpoint_path(full_dir, 2)) == bytes(checkpoint_path(part_dir, 2)));
}

TEST_CASE("parallel_for visits every index once and propagates errors") {
    for (int jobs : {1, 2, 5}) {
        std::vector<int> hits(37, 0);
        parallel_for(hits.size(), jobs, [&](std::size_t i) { ++hits[i]; });
        for (int h : hits) CHECK(h == 1);
    }
    CHECK_THROWS_AS(parallel_for(4, 2, [](std::size_t i) {
                        if (i == 2) throw DataError("boom");
                    }),
                    DataError);
}
