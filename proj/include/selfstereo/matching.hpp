#pragma once

#include <string>

#include "selfstereo/cost_volume.hpp"
#include "selfstereo/crf.hpp"
#include "selfstereo/lr_check.hpp"
#include "selfstereo/unary_model.hpp"

namespace selfstereo {

enum class SolverKind { sgm, wta };

std::string to_string(SolverKind solver);
SolverKind parse_solver(const std::string& name);

struct MatchConfig {
    SolverKind solver = SolverKind::sgm;
    PairwiseModel pairwise;
    ConsistencyConfig filter;
};

/// Pairwise defaults for Hamming census costs (5x5 window, costs in [0, 24]).
PairwiseModel census_pairwise();

struct MatchResult {
    DisparityMap left;           // integer labels, left reference
    DisparityMap right;          // integer labels, right reference
    DisparityMap left_refined;   // subpixel
    DisparityMap right_refined;
    DisparityMap consistent;     // lr_check of the integer maps
    DisparityMap prediction;     // lr_check of the refined maps
};

/// Solves both references (guides: left view for cost_l, right view for
/// cost_r), refines on the solver's aggregated costs and filters.
MatchResult match_volumes(const CostVolume& cost_l, const CostVolume& cost_r, const ImagePair& pair,
                          const MatchConfig& cfg);

/// One feature pass per view; the right-reference volume reuses the features.
MatchResult match_with_model(const ImagePair& pair, const UnaryModel& model, const MatchConfig& cfg);

MatchResult match_with_census(const ImagePair& pair, int window, int d_max, const MatchConfig& cfg);

}  // namespace selfstereo
