#include "selfstereo/matching.hpp"

#include "selfstereo/error.hpp"

namespace selfstereo {

std::string to_string(SolverKind solver) { return solver == SolverKind::sgm ? "sgm" : "wta"; }

SolverKind parse_solver(const std::string& name) {
    if (name == "sgm") return SolverKind::sgm;
    if (name == "wta") return SolverKind::wta;
    throw UsageError("unknown solver '" + name + "'");
}

PairwiseModel census_pairwise() {
    PairwiseModel pw;
    pw.p1 = 2.0;
    pw.p2_base = 10.0;
    pw.edge_sensitivity = 10.0;
    return pw;
}

MatchResult match_volumes(const CostVolume& cost_l, const CostVolume& cost_r, const ImagePair& pair,
                          const MatchConfig& cfg) {
    MatchResult out;
    auto solve = [&](const CostVolume& cost, const Image& guide, DisparityMap& labels, DisparityMap& refined) {
        if (cfg.solver == SolverKind::sgm) {
            const CostVolume aggregated = aggregate_sgm(cost, cfg.pairwise, guide);
            labels = solve_wta(aggregated);
            refined = subpixel_refine(aggregated, labels);
        } else {
            labels = solve_wta(cost);
            refined = subpixel_refine(cost, labels);
        }
    };
    solve(cost_l, pair.left, out.left, out.left_refined);
    solve(cost_r, pair.right, out.right, out.right_refined);
    out.consistent = lr_check(out.left, out.right, cfg.filter);
    out.prediction = lr_check(out.left_refined, out.right_refined, cfg.filter);
    return out;
}

MatchResult match_with_model(const ImagePair& pair, const UnaryModel& model, const MatchConfig& cfg) {
    pair.validate();
    const FeatureMap fl = extract_features(pair.left, model);
    const FeatureMap fr = extract_features(pair.right, model);
    const CostVolume cost_l = build_cost_volume(fl, fr, model.d_max);
    const CostVolume cost_r = build_right_cost_volume(fl, fr, model.d_max);
    return match_volumes(cost_l, cost_r, pair, cfg);
}

MatchResult match_with_census(const ImagePair& pair, int window, int d_max, const MatchConfig& cfg) {
    return match_volumes(census_cost_volume(pair, window, d_max), census_cost_volume_right(pair, window, d_max),
                         pair, cfg);
}

}  // namespace selfstereo
