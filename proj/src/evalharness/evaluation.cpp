#include "selfstereo/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "selfstereo/error.hpp"

namespace selfstereo {

double EvalReport::accuracy_at(double threshold) const {
    for (const auto& a : accuracy)
        if (a.threshold == threshold) return a.fraction;
    throw UsageError("threshold " + std::to_string(threshold) + " was not evaluated");
}

EvalAccumulator::EvalAccumulator(std::vector<double> thresholds)
    : thresholds_(std::move(thresholds)), within_(thresholds_.size(), 0) {
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
        if (!(thresholds_[i] > 0.0)) throw UsageError("accuracy thresholds must be positive");
        if (i > 0 && !(thresholds_[i] > thresholds_[i - 1]))
            throw UsageError("accuracy thresholds must be sorted ascending");
    }
}

void EvalAccumulator::add(const DisparityMap& predicted, const DisparityMap& reference, const std::string& name) {
    if (!predicted.same_shape(reference))
        throw DataError("dimension mismatch between prediction and reference" +
                        (name.empty() ? std::string() : " for pair " + name));
    for (std::size_t i = 0; i < reference.pixel_count(); ++i) {
        const bool p = predicted.valid[i] != 0;
        const bool r = reference.valid[i] != 0;
        n_predicted_ += p;
        n_reference_ += r;
        if (!(p && r)) continue;
        ++n_intersection_;
        const double err = std::abs(predicted.disparity[i] - reference.disparity[i]);
        abs_error_sum_ += err;
        for (std::size_t t = 0; t < thresholds_.size(); ++t) within_[t] += err <= thresholds_[t];
    }
}

EvalReport EvalAccumulator::report() const {
    EvalReport r;
    r.n_reference = n_reference_;
    r.n_predicted = n_predicted_;
    r.n_intersection = n_intersection_;
    r.recall = n_reference_ ? static_cast<double>(n_intersection_) / n_reference_ : 0.0;
    r.mean_abs_error = n_intersection_ ? abs_error_sum_ / n_intersection_ : 0.0;
    for (std::size_t t = 0; t < thresholds_.size(); ++t)
        r.accuracy.push_back({thresholds_[t], n_intersection_ ? static_cast<double>(within_[t]) / n_intersection_ : 0.0});
    return r;
}

double recall(const DisparityMap& predicted, const DisparityMap& reference) {
    EvalAccumulator acc(std::vector<double>{});
    acc.add(predicted, reference);
    const EvalReport r = acc.report();
    if (r.n_reference == 0) throw DataError("recall: reference has no valid pixels");
    return r.recall;
}

std::vector<ThresholdAccuracy> accuracy_at(const DisparityMap& predicted, const DisparityMap& reference,
                                           const std::vector<double>& thresholds) {
    EvalAccumulator acc(thresholds);
    acc.add(predicted, reference);
    const EvalReport r = acc.report();
    if (r.n_intersection == 0) throw DataError("accuracy: prediction and reference do not intersect");
    return r.accuracy;
}

EvalReport evaluate(const DisparityMap& predicted, const DisparityMap& reference,
                    const std::vector<double>& thresholds) {
    EvalAccumulator acc(thresholds);
    acc.add(predicted, reference);
    return acc.report();
}

DisparityMap subsample_reference(const DisparityMap& reference, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("subsample fraction must be in (0,1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DisparityMap out = reference;
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        const bool keep = u(rng) < fraction;
        out.valid[i] = out.valid[i] && keep;
    }
    return out;
}

void CameraGeometry::validate() const {
    if (!(focal_length > 0.0) || !(baseline > 0.0))
        throw UsageError("focal length and baseline must be positive");
}

DepthMap disparity_to_depth(const DisparityMap& disparity, const CameraGeometry& geom) {
    geom.validate();
    DepthMap out{disparity.width, disparity.height, std::vector<double>(disparity.pixel_count(), 0.0),
                 std::vector<std::uint8_t>(disparity.pixel_count(), 0)};
    const double fb = geom.focal_length * geom.baseline;
    for (std::size_t i = 0; i < disparity.pixel_count(); ++i) {
        if (!disparity.valid[i] || !(disparity.disparity[i] > 0.0)) continue;
        out.depth[i] = fb / disparity.disparity[i];
        out.valid[i] = 1;
    }
    return out;
}

DisparityMap depth_to_disparity(const DepthMap& depth, const CameraGeometry& geom) {
    geom.validate();
    DisparityMap out(depth.width, depth.height, 0.0, false);
    const double fb = geom.focal_length * geom.baseline;
    for (std::size_t i = 0; i < depth.depth.size(); ++i) {
        if (!depth.valid[i] || !(depth.depth[i] > 0.0)) continue;
        out.disparity[i] = fb / depth.depth[i];
        out.valid[i] = 1;
    }
    return out;
}

std::vector<ComparisonRow> compare_models(const std::vector<DisparityMap>& references,
                                          const std::vector<ModelRun>& runs,
                                          const std::vector<double>& thresholds,
                                          const std::vector<std::string>& pair_names) {
    std::vector<ComparisonRow> rows;
    for (const auto& run : runs) {
        if (run.predictions.size() != references.size())
            throw DataError("run '" + run.name + "' has " + std::to_string(run.predictions.size()) +
                            " predictions for " + std::to_string(references.size()) + " pairs");
        EvalAccumulator acc(thresholds);
        for (std::size_t i = 0; i < references.size(); ++i)
            acc.add(run.predictions[i], references[i], i < pair_names.size() ? pair_names[i] : std::to_string(i));
        rows.push_back({run.name, acc.report()});
    }
    return rows;
}

std::string format_table(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    char buf[64];
    out << "Model               Recall [%]";
    if (!rows.empty())
        for (const auto& a : rows.front().report.accuracy) {
            std::snprintf(buf, sizeof buf, "  Acc@%.2gpx", a.threshold);
            out << buf;
        }
    out << "\n";
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%-18.18s  %10.1f", row.name.c_str(), 100.0 * row.report.recall);
        out << buf;
        for (const auto& a : row.report.accuracy) {
            std::snprintf(buf, sizeof buf, "  %9.1f", 100.0 * a.fraction);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json accuracy = nlohmann::json::array();
    for (const auto& a : report.accuracy) accuracy.push_back({{"threshold", a.threshold}, {"fraction", a.fraction}});
    return {{"recall", report.recall},
            {"accuracy", accuracy},
            {"n_reference", report.n_reference},
            {"n_predicted", report.n_predicted},
            {"n_intersection", report.n_intersection},
            {"mean_abs_error", report.mean_abs_error}};
}

nlohmann::json to_json(const std::vector<ComparisonRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json j = to_json(row.report);
        j["name"] = row.name;
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace selfstereo
