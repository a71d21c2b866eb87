#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "selfstereo/disparity_map.hpp"

namespace selfstereo {

inline const std::vector<double> kDefaultThresholds = {0.5, 1.0, 2.0};

struct ThresholdAccuracy {
    double threshold = 0.0;
    double fraction = 0.0;
};

struct EvalReport {
    double recall = 0.0;
    std::vector<ThresholdAccuracy> accuracy;
    std::size_t n_reference = 0;
    std::size_t n_predicted = 0;
    std::size_t n_intersection = 0;
    double mean_abs_error = 0.0;

    /// Accuracy at an exact threshold value; throws if it was not evaluated.
    double accuracy_at(double threshold) const;
};

/// |P_S n P_L| / |P_L| with P_S the valid predicted pixels and P_L the valid
/// reference pixels.
double recall(const DisparityMap& predicted, const DisparityMap& reference);

/// Fraction of P_S n P_L with |d_pred - d_ref| <= t, per threshold.
std::vector<ThresholdAccuracy> accuracy_at(const DisparityMap& predicted, const DisparityMap& reference,
                                           const std::vector<double>& thresholds);

/// Pixel-weighted accumulation over a corpus: recall is the sum of
/// intersections over the sum of references.
class EvalAccumulator {
public:
    explicit EvalAccumulator(std::vector<double> thresholds = kDefaultThresholds);

    void add(const DisparityMap& predicted, const DisparityMap& reference, const std::string& name = {});
    EvalReport report() const;

private:
    std::vector<double> thresholds_;
    std::vector<std::size_t> within_;
    std::size_t n_reference_ = 0;
    std::size_t n_predicted_ = 0;
    std::size_t n_intersection_ = 0;
    double abs_error_sum_ = 0.0;
};

EvalReport evaluate(const DisparityMap& predicted, const DisparityMap& reference,
                    const std::vector<double>& thresholds = kDefaultThresholds);

/// Keeps each valid reference pixel with probability `fraction` (fixed seed),
/// emulating a sparse laser reference.
DisparityMap subsample_reference(const DisparityMap& reference, double fraction, std::uint64_t seed);

struct CameraGeometry {
    double focal_length = 1000.0;  // pixels
    double baseline = 0.6;         // meters

    void validate() const;
};

/// Z = f * B / d on valid pixels; d <= 0 becomes invalid.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> depth;
    std::vector<std::uint8_t> valid;
};

DepthMap disparity_to_depth(const DisparityMap& disparity, const CameraGeometry& geom);
DisparityMap depth_to_disparity(const DepthMap& depth, const CameraGeometry& geom);

struct ModelRun {
    std::string name;
    std::vector<DisparityMap> predictions;  // one per corpus pair, same order as references
};

struct ComparisonRow {
    std::string name;
    EvalReport report;
};

std::vector<ComparisonRow> compare_models(const std::vector<DisparityMap>& references,
                                          const std::vector<ModelRun>& runs,
                                          const std::vector<double>& thresholds = kDefaultThresholds,
                                          const std::vector<std::string>& pair_names = {});

/// Fixed-width table with Recall and Accuracy-per-threshold columns, in percent.
std::string format_table(const std::vector<ComparisonRow>& rows);

nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const std::vector<ComparisonRow>& rows);

}  // namespace selfstereo
