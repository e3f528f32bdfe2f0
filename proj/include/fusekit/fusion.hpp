// Output-level fusion of two class-posterior vectors: equal-weight product
// rule, the per-class thresholded rule, and the grid search that learns the
// thresholds. Also the input-level concatenation baseline.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fusekit/common.hpp"

namespace fusekit {

struct PosteriorPair {
    std::vector<double> p_x;    // visual-source posterior
    std::vector<double> p_s;    // answer-source posterior
    std::vector<double> prior;  // class prior; strictly positive for fusing
};

struct ThresholdTable {
    std::vector<double> theta_x;  // per class; values on the 0.0..1.0 grid, step 0.1
    std::vector<double> theta_s;
};

inline constexpr int kThresholdGridSize = 11;
double threshold_grid_value(int step);  // step in [0, 10]

// x entries first, then the numeric answer values.
std::vector<double> concat_features(const std::vector<double>& x, const std::vector<double>& answers);

// fused(c) proportional to p_x(c) * p_s(c) / prior(c), renormalized.
std::vector<double> nb_fuse(const PosteriorPair& pair);

// Unnormalized log scores of the equal-weight rule (exposed so scale
// invariance can be tested ahead of normalization).
std::vector<double> nb_fuse_log_scores(const PosteriorPair& pair);

// Per class: below theta_x use the answer source alone, else below theta_s
// use the visual source alone, else the product rule. All-zero thresholds
// reduce to nb_fuse.
std::vector<double> modified_nb_fuse(const PosteriorPair& pair, const ThresholdTable& thresholds);

// Per-class threshold via exhaustive search on the 11-point grid, maximizing
// the per-class F1 of accepted predictions; ties toward the smallest theta.
// Classes absent from `labels` get theta 0 and a warning line on `warnings`.
std::vector<double> grid_search_thresholds(const Matrix& posteriors, const std::vector<int>& labels,
                                           std::vector<std::string>* warnings = nullptr);

// Per-class F1 at one threshold, as used by the grid search (test hook).
double grid_f1_at(const Matrix& posteriors, const std::vector<int>& labels, int class_index,
                  double theta);

// Greedy empirical-risk threshold selection: sweeps the classes once in
// index order and, for each class, picks the (theta_x, theta_s) grid pair
// maximizing that class's F1 under the *fused* predictions with all other
// thresholds held fixed. Ties go to the smallest pair, so a class keeps
// (0, 0) — plain product fusion — unless gating genuinely helps.
ThresholdTable greedy_threshold_search(const Matrix& matrix_x, const Matrix& matrix_s,
                                       const std::vector<int>& labels,
                                       const std::vector<double>& prior);

enum class FusionMethod { equal_weight, modified_nb };

struct FuseBatchResult {
    Matrix fused;
    std::vector<int> predictions;  // row argmax, ties to the lowest index
};

FuseBatchResult fuse_batch(const Matrix& matrix_x, const Matrix& matrix_s,
                           const std::vector<double>& prior, FusionMethod method,
                           const std::optional<ThresholdTable>& thresholds = std::nullopt);

void save_thresholds(const ThresholdTable& table, const std::vector<std::string>& class_names,
                     const std::string& path);
ThresholdTable load_thresholds(const std::string& path);

}  // namespace fusekit
