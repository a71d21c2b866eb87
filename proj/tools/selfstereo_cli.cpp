#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "selfstereo/error.hpp"
#include "selfstereo/image_io.hpp"
#include "selfstereo/lr_check.hpp"
#include "selfstereo/tiling.hpp"
#include "selfstereo/training.hpp"

namespace fs = std::filesystem;
using namespace selfstereo;

namespace {

constexpr const char* kVersion = "1.0.0";

int default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Globals {
    std::uint64_t seed = 1;
    int jobs = default_jobs();
    bool verbose = false;
};

// ---- option groups shared by several subcommands ---------------------------

struct PairwiseOptions {
    PairwiseModel model;
    std::string truncation = "potts-like";
    std::vector<CLI::Option*> options;

    void add(CLI::App* app) {
        options = {
            app->add_option("--p1", model.p1, "penalty for label jumps of 1"),
            app->add_option("--p2", model.p2_base, "base penalty for larger jumps"),
            app->add_option("--edge-sensitivity", model.edge_sensitivity, "contrast coefficient of the edge weight"),
            app->add_option("--truncation", truncation, "potts-like or truncated-linear")
                ->check(CLI::IsMember({"potts-like", "truncated-linear"})),
            app->add_option("--tau", model.tau, "cap of the truncated-linear penalty"),
        };
    }

    /// Options left unset fall back to `base`.
    PairwiseModel resolve(const PairwiseModel& base) const {
        PairwiseModel out = base;
        if (options[0]->count()) out.p1 = model.p1;
        if (options[1]->count()) out.p2_base = model.p2_base;
        if (options[2]->count()) out.edge_sensitivity = model.edge_sensitivity;
        if (options[3]->count())
            out.truncation = truncation == "potts-like" ? Truncation::potts_like : Truncation::truncated_linear;
        if (options[4]->count()) out.tau = model.tau;
        out.validate();
        return out;
    }
};

struct TrainOptions {
    TrainConfig cfg;
    std::string optimizer = "adam";

    void add(CLI::App* app) {
        app->add_option("--lr", cfg.learning_rate, "learning rate");
        app->add_option("--optimizer", optimizer, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}));
        app->add_option("--beta1", cfg.beta1, "Adam first-moment decay");
        app->add_option("--beta2", cfg.beta2, "Adam second-moment decay");
        app->add_option("--adam-epsilon", cfg.adam_epsilon, "Adam denominator offset");
        app->add_option("--epochs", cfg.epochs, "epochs per training run");
        app->add_option("--batch", cfg.batch, "crops per optimizer step");
        app->add_option("--temperature", cfg.softmax_temperature, "softmax temperature");
        app->add_option("--crop-h", cfg.crop_h, "training crop height (0 = full image)");
        app->add_option("--crop-w", cfg.crop_w, "training crop width (0 = full image)");
        app->add_option("--crops-per-sample", cfg.crops_per_sample, "random crops per sample per epoch");
    }

    TrainConfig resolve(const Globals& g) const {
        TrainConfig out = cfg;
        out.optimizer = parse_optimizer(optimizer);
        out.seed = g.seed;
        out.jobs = g.jobs;
        out.validate();
        return out;
    }
};

struct ArchOptions {
    ModelSpec spec;
    std::vector<CLI::Option*> options;

    void add(CLI::App* app) {
        options = {
            app->add_option("--hidden", spec.hidden, "feature channels per layer"),
            app->add_option("--layers", spec.layers, "convolution layers"),
            app->add_option("--kernel", spec.kernel, "odd kernel size"),
            app->add_option("--d-max", spec.d_max, "disparity levels"),
        };
    }

    bool any_set() const {
        return std::any_of(options.begin(), options.end(), [](const CLI::Option* o) { return o->count() > 0; });
    }

    /// Throws if an explicitly requested architecture differs from the model.
    void check(const UnaryModel& model, const fs::path& path) const {
        bool match = true;
        if (options[0]->count())
            for (const auto& l : model.layers) match = match && l.out_ch == spec.hidden;
        if (options[1]->count()) match = match && static_cast<int>(model.layers.size()) == spec.layers;
        if (options[2]->count())
            for (const auto& l : model.layers) match = match && l.kernel == spec.kernel;
        if (options[3]->count()) match = match && model.d_max == spec.d_max;
        if (!match) throw DataError(path.string() + ": model/architecture mismatch with checkpoint header");
    }
};

void check_channels(const UnaryModel& model, const std::vector<CorpusItem>& items, const fs::path& path) {
    for (const auto& item : items)
        if (item.pair.channels() != model.in_channels())
            throw DataError(path.string() + ": model/architecture mismatch with checkpoint header (model expects " +
                            std::to_string(model.in_channels()) + " channels, " + item.id + " has " +
                            std::to_string(item.pair.channels()) + ")");
}

std::vector<double> parse_thresholds(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string token;
    while (std::getline(in, token, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw UsageError("bad threshold '" + token + "'");
        }
    }
    if (out.empty()) throw UsageError("no thresholds given");
    return out;
}

/// Every option of the app and its subcommands reads SELFSTEREO_[SUB_]NAME
/// from the environment.
void attach_environment(CLI::App& app, const std::string& prefix) {
    for (CLI::Option* opt : app.get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config" || name == "version" || opt->get_positional()) continue;
        std::string env = prefix + name;
        std::transform(env.begin(), env.end(), env.begin(), [](unsigned char c) {
            return c == '-' ? '_' : static_cast<char>(std::toupper(c));
        });
        opt->envname(env);
    }
    for (CLI::App* sub : app.get_subcommands({})) {
        std::string sub_prefix = prefix + sub->get_name() + "_";
        attach_environment(*sub, sub_prefix);
    }
}

/// Resolved option values of the app and the selected subcommand: what was
/// given (flag, config file or environment) or else the default.
nlohmann::json resolved_options(const CLI::App& app) {
    nlohmann::json out = nlohmann::json::object();
    for (const CLI::Option* opt : app.get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config" || name == "version") continue;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            if (opt->get_expected_min() == 0)
                out[name] = true;
            else if (results.size() == 1)
                out[name] = results.front();
            else
                out[name] = results;
        } else if (opt->get_expected_min() == 0) {
            out[name] = false;
        } else {
            out[name] = opt->get_default_str();
        }
    }
    return out;
}

std::string to_config_value(const nlohmann::json& v) {
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_array()) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + nlohmann::json(v[i].get<std::string>()).dump();
        return s + "]";
    }
    return nlohmann::json(v.get<std::string>()).dump();
}

/// The resolved configuration in the --config file format.
std::string config_file_text(const nlohmann::json& global, const std::string& sub, const nlohmann::json& local) {
    std::ostringstream out;
    for (const auto& [k, v] : global.items())
        if (!v.is_string() || !v.get<std::string>().empty()) out << k << "=" << to_config_value(v) << "\n";
    out << "[" << sub << "]\n";
    for (const auto& [k, v] : local.items())
        if (!v.is_string() || !v.get<std::string>().empty()) out << k << "=" << to_config_value(v) << "\n";
    return out.str();
}

std::vector<CorpusItem> single_pair(const fs::path& left, const fs::path& right, const std::string& id) {
    ImagePair pair{load_image(left), load_image(right)};
    pair.validate();
    return {{id, std::move(pair)}};
}

EvalReport evaluate_corpus(const std::vector<DisparityMap>& predictions, const std::vector<DisparityMap>& references,
                           const std::vector<std::string>& ids, const std::vector<double>& thresholds) {
    EvalAccumulator acc(thresholds);
    for (std::size_t i = 0; i < references.size(); ++i) acc.add(predictions[i], references[i], ids[i]);
    return acc.report();
}

// ---- subcommands -------------------------------------------------------------

struct SynthCommand {
    CorpusSpec spec;
    std::string texture = "random-dot";
    std::string shift = "none";
    bool flat = false;
    fs::path out;

    void add(CLI::App* app) {
        app->add_option("--out", out, "output directory")->required();
        app->add_option("--pairs", spec.n_pairs, "number of stereo pairs");
        app->add_option("--width", spec.width, "image width");
        app->add_option("--height", spec.height, "image height");
        app->add_option("--channels", spec.channels, "color channels (1, 3 or 4)");
        app->add_option("--d-max", spec.d_max, "disparity levels");
        app->add_option("--noise", spec.noise_sigma, "per-view Gaussian noise sigma");
        app->add_option("--texture", texture, "random-dot, smooth-noise or blocks")
            ->check(CLI::IsMember({"random-dot", "smooth-noise", "blocks"}));
        app->add_option("--shift", shift, "none, channel-swap, noise-boost or contrast-shift")
            ->check(CLI::IsMember({"none", "channel-swap", "noise-boost", "contrast-shift"}));
        app->add_option("--min-objects", spec.min_objects, "fewest rectangles per scene");
        app->add_option("--max-objects", spec.max_objects, "most rectangles per scene");
        app->add_flag("--flat", flat, "fronto-parallel surfaces only");
    }

    int run(const Globals& g) {
        spec.texture = parse_texture_style(texture);
        spec.domain_shift = parse_domain_shift(shift);
        spec.slanted = !flat;
        spec.validate();
        const auto scenes = generate_corpus(spec, g.seed);
        const fs::path manifest = write_corpus(out, spec, g.seed, scenes);
        std::cout << "wrote " << scenes.size() << " pairs to " << manifest.string() << "\n";
        return 0;
    }
};

struct MatchCommand {
    fs::path left, right, manifest, model_path, out;
    std::string id = "pair";
    bool census = false;
    int window = 5;
    std::string solver = "sgm";
    bool png = false;
    double epsilon = 0.9;
    int tile = 0;
    int tile_overlap = 0;
    PairwiseOptions pairwise;
    ArchOptions arch;

    void add(CLI::App* app) {
        auto* l = app->add_option("--left", left, "left image");
        auto* r = app->add_option("--right", right, "right image");
        auto* m = app->add_option("--manifest", manifest, "corpus manifest (instead of --left/--right)");
        l->needs(r);
        r->needs(l);
        m->excludes(l)->excludes(r);
        app->add_option("--id", id, "output name for a single pair");
        auto* mp = app->add_option("--model", model_path, "model checkpoint");
        auto* c = app->add_flag("--census", census, "use the census cost instead of a model");
        mp->excludes(c);
        app->add_option("--window", window, "census window (odd)");
        app->add_option("--solver", solver, "sgm or wta")->check(CLI::IsMember({"sgm", "wta"}));
        app->add_option("--epsilon", epsilon, "left-right consistency threshold");
        app->add_option("--out", out, "output directory")->required();
        app->add_flag("--png", png, "also write color-coded disparity PNGs");
        app->add_option("--tile", tile, "match in square tiles of this size (0 = whole image)");
        app->add_option("--tile-overlap", tile_overlap, "tile overlap (0 = d_max)");
        pairwise.add(app);
        arch.add(app);
    }

    int run(const Globals& g) {
        if (manifest.empty() && left.empty()) throw UsageError("match needs --left/--right or --manifest");
        if (!census && model_path.empty()) throw UsageError("match needs --model or --census");
        const auto items = manifest.empty() ? single_pair(left, right, id) : load_corpus_pairs(read_manifest(manifest));

        MatchConfig cfg;
        cfg.solver = parse_solver(solver);
        cfg.filter.epsilon = epsilon;
        cfg.filter.validate();
        cfg.pairwise = pairwise.resolve(census ? census_pairwise() : PairwiseModel{});

        UnaryModel model;
        int d_max = arch.spec.d_max;
        if (!census) {
            model = load_checkpoint(model_path);
            arch.check(model, model_path);
            check_channels(model, items, model_path);
            d_max = model.d_max;
        }
        fs::create_directories(out);
        auto match_pair = [&](const ImagePair& pair) {
            return census ? match_with_census(pair, window, d_max, cfg) : match_with_model(pair, model, cfg);
        };
        std::vector<MatchResult> results(items.size());
        parallel_for(items.size(), g.jobs, [&](std::size_t i) {
            if (tile <= 0) {
                results[i] = match_pair(items[i].pair);
                return;
            }
            const TilingConfig tiling{tile, tile, tile_overlap > 0 ? tile_overlap : d_max, d_max};
            const auto tiles = tile_pair(items[i].pair, tiling, items[i].id);
            std::vector<DisparityMap> left_maps, right_maps;
            for (const Tile& t : tiles) {
                const MatchResult r = match_pair(t.pair);
                left_maps.push_back(r.left_refined);
                right_maps.push_back(r.right_refined);
            }
            const int w = items[i].pair.width(), h = items[i].pair.height();
            MatchResult& r = results[i];
            r.left_refined = stitch_tiles(tiles, left_maps, w, h);
            r.right_refined = stitch_tiles(tiles, right_maps, w, h);
            r.prediction = lr_check(r.left_refined, r.right_refined, cfg.filter);
        });
        for (std::size_t i = 0; i < items.size(); ++i) {
            const std::string& name = items[i].id;
            const MatchResult& r = results[i];
            save_pfm(r.left_refined, out / (name + "_left.pfm"));
            save_pfm(r.right_refined, out / (name + "_right.pfm"));
            save_pfm(r.prediction, out / (name + ".pfm"));
            if (png) {
                save_image(colorize_disparity(r.left_refined, d_max), out / (name + "_left.png"));
                save_image(colorize_disparity(r.prediction, d_max), out / (name + ".png"));
            }
            if (g.verbose)
                std::cerr << name << ": " << survivor_stats(r.prediction).fraction * 100.0 << "% consistent\n";
        }
        std::cout << "matched " << items.size() << " pairs into " << out.string() << "\n";
        return 0;
    }
};

struct FilterCommand {
    fs::path left, right, out, mask;
    double epsilon = 0.9;

    void add(CLI::App* app) {
        app->add_option("--left-disp", left, "left-reference disparity (PFM)")->required();
        app->add_option("--right-disp", right, "right-reference disparity (PFM)")->required();
        app->add_option("--epsilon", epsilon, "consistency threshold");
        app->add_option("--out", out, "filtered disparity (PFM)")->required();
        app->add_option("--mask", mask, "optional validity mask (PGM)");
    }

    int run(const Globals&) {
        ConsistencyConfig cfg{epsilon};
        const DisparityMap filtered = lr_check(load_pfm(left), load_pfm(right), cfg);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        save_pfm(filtered, out);
        if (!mask.empty()) save_mask(filtered, mask);
        const SurvivorStats s = survivor_stats(filtered);
        std::cout << "survivors " << s.count << " (" << s.fraction * 100.0 << "%)\n";
        return 0;
    }
};

struct TrainCommand {
    fs::path corpus, out, init;
    TrainOptions train;
    ArchOptions arch;

    void add(CLI::App* app) {
        app->add_option("--corpus", corpus, "corpus manifest with ground truth")->required();
        app->add_option("--out", out, "output checkpoint")->required();
        app->add_option("--init", init, "start from this checkpoint instead of a fresh model");
        train.add(app);
        arch.add(app);
    }

    int run(const Globals& g) {
        const Manifest manifest = read_manifest(corpus);
        const auto items = load_corpus_pairs(manifest);
        const auto refs = load_corpus_references(manifest);
        if (items.empty()) throw DataError(corpus.string() + ": corpus is empty");
        UnaryModel model;
        if (!init.empty()) {
            model = load_checkpoint(init);
            arch.check(model, init);
        } else {
            ModelSpec spec = arch.spec;
            spec.in_channels = items.front().pair.channels();
            model = make_model(spec, g.seed);
        }
        check_channels(model, items, init.empty() ? corpus : init);
        std::vector<TrainingSample> samples;
        for (std::size_t i = 0; i < items.size(); ++i) samples.push_back({items[i].id, items[i].pair, refs[i]});
        const TrainConfig cfg = train.resolve(g);
        const TrainResult result = train_epochs(model, samples, cfg, [&](int epoch, double loss) {
            std::cout << "epoch " << epoch << " loss " << loss << "\n" << std::flush;
        });
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        save_checkpoint(result.model, out);
        std::cout << "saved " << out.string() << "\n";
        return 0;
    }
};

struct SelfTrainCommand {
    fs::path corpus, init, out;
    int iterations = 2;
    bool filter_off = false;
    bool resume = false;
    bool no_eval = false;
    std::string solver = "sgm";
    double epsilon = 0.9;
    double subsample = 1.0;
    std::string thresholds = "0.5,1,2";
    TrainOptions train;
    PairwiseOptions pairwise;

    void add(CLI::App* app) {
        app->add_option("--corpus", corpus, "target corpus manifest")->required();
        app->add_option("--init", init, "bootstrap checkpoint")->required();
        app->add_option("--out", out, "output directory")->required();
        app->add_option("--iterations", iterations, "self-training iterations");
        app->add_flag("--filter-off", filter_off, "train on unfiltered labels (ablation)");
        app->add_flag("--resume", resume, "reuse checkpoints already present in --out");
        app->add_flag("--no-eval", no_eval, "skip evaluation against corpus ground truth");
        app->add_option("--solver", solver, "sgm or wta")->check(CLI::IsMember({"sgm", "wta"}));
        app->add_option("--epsilon", epsilon, "left-right consistency threshold");
        app->add_option("--subsample", subsample, "fraction of reference pixels used for evaluation");
        app->add_option("--thresholds", thresholds, "comma-separated accuracy thresholds (px)");
        train.add(app);
        pairwise.add(app);
    }

    int run(const Globals& g, const nlohmann::json& header, const std::string& config_text) {
        const Manifest manifest = read_manifest(corpus);
        const auto items = load_corpus_pairs(manifest);
        UnaryModel model = load_checkpoint(init);
        check_channels(model, items, init);

        SelfTrainConfig cfg;
        cfg.iterations = iterations;
        cfg.train = train.resolve(g);
        cfg.match.solver = parse_solver(solver);
        cfg.match.filter.epsilon = epsilon;
        cfg.match.pairwise = pairwise.resolve(PairwiseModel{});
        cfg.filter_enabled = !filter_off;
        cfg.output_dir = out;
        cfg.resume = resume;
        cfg.jobs = g.jobs;
        cfg.validate();

        const auto levels = parse_thresholds(thresholds);
        Evaluator evaluator;
        std::vector<DisparityMap> refs;
        std::vector<std::string> ids;
        const bool has_gt = std::all_of(manifest.entries.begin(), manifest.entries.end(),
                                        [](const ManifestEntry& e) { return e.gt_left.has_value(); });
        if (!no_eval && has_gt) {
            refs = load_corpus_references(manifest);
            for (std::size_t i = 0; i < refs.size(); ++i) {
                if (subsample < 1.0) refs[i] = subsample_reference(refs[i], subsample, derive_seed(g.seed, 1000 + i));
                ids.push_back(items[i].id);
            }
            evaluator = [&](const UnaryModel& m) {
                return evaluate_corpus(predict_corpus(items, m, cfg.match, g.jobs), refs, ids, levels);
            };
        }

        fs::create_directories(out);
        {
            std::ofstream cfg_file(out / "config.ini");
            cfg_file << config_text;
        }
        const auto records = self_train(items, model, cfg, evaluator, header);
        if (evaluator) {
            std::vector<ComparisonRow> rows;
            for (const auto& r : records)
                rows.push_back({r.iteration == 0 ? "bootstrap" : "iter" + std::to_string(r.iteration), *r.report});
            const std::string table = format_table(rows);
            std::cout << table;
            std::ofstream(out / "eval.txt") << table;
            std::ofstream(out / "eval.json") << to_json(rows).dump(2) << "\n";
        }
        std::cout << "completed " << iterations << " iterations in " << out.string() << "\n";
        return 0;
    }
};

struct EvalCommand {
    std::vector<fs::path> predictions;
    fs::path reference, json;
    std::string thresholds = "0.5,1,2";
    double subsample = 1.0;
    fs::path depth_dir;
    CameraGeometry camera;

    void add(CLI::App* app) {
        app->add_option("--pred", predictions, "prediction directory (<id>.pfm); repeat to compare runs")->required();
        app->add_option("--ref", reference, "reference manifest or directory of PFMs")->required();
        app->add_option("--thresholds", thresholds, "comma-separated accuracy thresholds (px)");
        app->add_option("--subsample", subsample, "fraction of reference pixels kept");
        app->add_option("--json", json, "JSON report path (default: eval.json in the first --pred)");
        app->add_option("--depth", depth_dir, "also write depth maps (meters, PFM) to DIR/<run>/<id>.pfm");
        app->add_option("--focal-length", camera.focal_length, "focal length in pixels");
        app->add_option("--baseline", camera.baseline, "stereo baseline in meters");
    }

    void write_depth(const ModelRun& run, const std::vector<std::string>& ids) const {
        camera.validate();
        const fs::path dir = depth_dir / run.name;
        fs::create_directories(dir);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const DepthMap z = disparity_to_depth(run.predictions[i], camera);
            DisparityMap out(z.width, z.height);
            out.disparity = z.depth;
            out.valid = z.valid;
            save_pfm(out, dir / (ids[i] + ".pfm"));
        }
    }

    int run(const Globals& g) {
        std::vector<std::string> ids;
        std::vector<DisparityMap> refs;
        if (fs::is_directory(reference)) {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(reference))
                if (entry.path().extension() == ".pfm") files.push_back(entry.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                ids.push_back(f.stem().string());
                refs.push_back(load_pfm(f));
            }
        } else {
            const Manifest manifest = read_manifest(reference);
            refs = load_corpus_references(manifest);
            for (const auto& e : manifest.entries) ids.push_back(e.id);
        }
        if (refs.empty()) throw DataError(reference.string() + ": no reference maps");
        if (subsample < 1.0)
            for (std::size_t i = 0; i < refs.size(); ++i)
                refs[i] = subsample_reference(refs[i], subsample, derive_seed(g.seed, 1000 + i));

        std::vector<ModelRun> runs;
        for (const auto& dir : predictions) {
            ModelRun run{dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string(), {}};
            for (const auto& id : ids) {
                const fs::path p = dir / (id + ".pfm");
                if (!fs::exists(p)) throw DataError("missing prediction " + p.string() + " for pair " + id);
                run.predictions.push_back(load_pfm(p));
            }
            if (!depth_dir.empty()) write_depth(run, ids);
            runs.push_back(std::move(run));
        }
        const auto rows = compare_models(refs, runs, parse_thresholds(thresholds), ids);
        std::cout << format_table(rows);
        const fs::path json_path = json.empty() ? predictions.front() / "eval.json" : json;
        std::ofstream out(json_path);
        if (!out) throw DataError("cannot write " + json_path.string());
        out << to_json(rows).dump(2) << "\n";
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-supervised stereo matching: synthetic corpora, CRF matching, self-training and evaluation"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "key=value configuration file; [subcommand] sections; flags win");
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Globals globals;
    app.add_option("--seed", globals.seed, "seed for corpus generation, initialization and training");
    app.add_option("--jobs", globals.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("-v,--verbose", globals.verbose, "progress on stderr");

    SynthCommand synth;
    MatchCommand match;
    FilterCommand filter;
    TrainCommand train;
    SelfTrainCommand selftrain;
    EvalCommand eval;
    auto* synth_app = app.add_subcommand("synth", "generate a synthetic stereo corpus");
    auto* match_app = app.add_subcommand("match", "compute disparity maps with a model or census costs");
    auto* filter_app = app.add_subcommand("filter", "left-right consistency filter of two PFM maps");
    auto* train_app = app.add_subcommand("train", "supervised training on corpus ground truth");
    auto* selftrain_app = app.add_subcommand("selftrain", "iterated pseudo-labeling and retraining");
    auto* eval_app = app.add_subcommand("eval", "recall and accuracy of predictions against references");
    synth.add(synth_app);
    match.add(match_app);
    filter.add(filter_app);
    train.add(train_app);
    selftrain.add(selftrain_app);
    eval.add(eval_app);
    attach_environment(app, "SELFSTEREO_");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*synth_app) return synth.run(globals);
        if (*match_app) return match.run(globals);
        if (*filter_app) return filter.run(globals);
        if (*train_app) return train.run(globals);
        if (*eval_app) return eval.run(globals);
        if (*selftrain_app) {
            const nlohmann::json global_opts = resolved_options(app);
            const nlohmann::json local_opts = resolved_options(*selftrain_app);
            std::vector<std::string> args(argv, argv + argc);
            const nlohmann::json header = {{"version", kVersion},
                                           {"argv", args},
                                           {"options", global_opts},
                                           {"selftrain", local_opts}};
            return selftrain.run(globals, header, config_file_text(global_opts, "selftrain", local_opts));
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
