#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shiftem/dataset.hpp"
#include "shiftem/partition.hpp"

namespace shiftem {

/// Disjoint, exhaustive, sizes within one of each other; deterministic in seed.
std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int k, std::uint64_t seed);

struct RegionEstimate {
    double psi = 0.0;
    double variance = 0.0;  // variance of the mean, s^2 / n_region
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double p_value = 1.0;
    Eigen::Index n = 0;
};

struct MarginalEstimate {
    std::string exposure;
    double psi = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct FoldResult {
    int fold = 0;
    bool flagged = false;
    std::string flag_reason;
    std::optional<std::string> exposure;    // empty -> no-modifier fold
    std::optional<PartitionRule> rule;
    std::optional<RegionEstimate> effect_v;
    std::optional<RegionEstimate> effect_vc;
    std::vector<MarginalEstimate> marginal;  // per exposure, validation rows

    // Validation-row material stacked by pool(): one column per exposure.
    std::vector<Eigen::Index> valid_rows;  // row ids in the full dataset
    Eigen::MatrixXd valid_iie;
    Eigen::MatrixXd valid_u;  // uncentered influence H*(Y-Q*) + iie
    std::vector<char> valid_in_v;  // membership under this fold's rule
    int selected_exposure_index = -1;
};

struct DifferenceTest {
    double diff = 0.0;
    double se = 0.0;
    double z = 0.0;
    double p_value = 1.0;
};

/// diff = psi_v - psi_vc, se = sqrt(var_v + var_vc) assuming negligible
/// covariance between the disjoint regions; two-sided normal p.
DifferenceTest difference_test(double psi_v, double var_v, double psi_vc, double var_vc);

/// 95% Wald interval psi +/- 1.96 se, shared by every reported estimate.
std::pair<double, double> wald_ci(double psi, double se);

struct PooledReport {
    std::optional<RegionEstimate> region_v;
    std::optional<RegionEstimate> region_vc;
    std::optional<DifferenceTest> difference;
    std::optional<PartitionRule> modal_rule;
    std::optional<std::string> modal_exposure;
    double agreement = 0.0;  // fraction of rule-bearing folds matching the modal pair
    std::vector<MarginalEstimate> variable_importance;
    int folds_used = 0;
    int folds_flagged = 0;
    int folds_no_modifier = 0;
};

/// Stage 1 on train (first stage + modifier search), stage 2 on validation
/// with train-fitted nuisances, marginals on validation rows.
FoldResult run_fold(const Dataset& train, const Dataset& valid, const ShiftSpec& resolved,
                    const AnalysisConfig& config, int fold_index,
                    const std::vector<Eigen::Index>& valid_ids);

/// Stacked-validation-row pooling: region means and EIF variances over the
/// union of validation folds, rows classified fold-locally.
PooledReport pool(const std::vector<FoldResult>& folds);

struct AnalysisResult {
    std::vector<FoldResult> folds;
    PooledReport pooled;
    ShiftSpec resolved_shift;
    AnalysisConfig config;
    Eigen::Index n = 0;
    std::size_t dropped_rows = 0;
};

AnalysisResult run_cv_pipeline(const Dataset& data, const ShiftSpec& spec,
                               const AnalysisConfig& config);

}  // namespace shiftem
