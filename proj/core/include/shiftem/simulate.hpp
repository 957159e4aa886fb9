#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shiftem/cv.hpp"
#include "shiftem/dataset.hpp"

namespace shiftem {

enum class Dgp { binary, continuous };

std::string dgp_name(Dgp dgp);
Dgp parse_dgp(const std::string& name);

struct SimTruth {
    std::string modifier;          // covariate carrying the effect jump
    double true_threshold = 0.0;   // V = {modifier <= threshold}
    double psi_v_true = 0.0;
    double psi_vc_true = 0.0;
    std::vector<char> true_membership;  // true on the high-effect (>) side
    double delta = 0.5;                 // shift applied to the first exposure
    std::string shifted_exposure;
};

/// Three Bernoulli(0.5) covariates, Gaussian exposures with covariate-driven
/// means, linear outcome with one exposure-covariate interaction. Truth under a
/// 0.5 reduction of the first exposure: -0.5 on the W3=0 side, -1.5 on W3=1.
std::pair<Dataset, SimTruth> gen_binary_dgp(Eigen::Index n, std::uint64_t seed);

/// Same structure but W3 ~ Normal(40, 10); the outcome uses the indicator
/// W3 > 55 while the analysis sees only the continuous covariate.
std::pair<Dataset, SimTruth> gen_continuous_dgp(Eigen::Index n, std::uint64_t seed);

std::pair<Dataset, SimTruth> generate_dgp(Dgp dgp, Eigen::Index n, std::uint64_t seed);

/// Monte-Carlo cross-check of the analytic per-region truth: regenerate a large
/// sample, apply the structural shift, average the outcome change per region.
std::pair<double, double> simulated_truth(Dgp dgp, Eigen::Index n, std::uint64_t seed);

struct DetectionStats {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false;  // no predicted positives
};

/// Positive class = the true high-effect (above-threshold) region.
DetectionStats detection_metrics(const std::vector<char>& predicted,
                                 const std::vector<char>& truth);

/// One replication of the full pipeline on a fresh draw.
struct RepOutcome {
    bool ok = false;
    std::string error;
    std::string root_covariate;  // empty when no modifier was found
    double root_threshold = 0.0;
    DetectionStats detection;
    long tp = 0, fp = 0, fn = 0, tn = 0;  // pooled-confusion accounting
    std::optional<RegionEstimate> est_v, est_vc;
    double truth_v = 0.0, truth_vc = 0.0;
};

std::vector<RepOutcome> run_reps(Eigen::Index n, int reps, Dgp dgp, const AnalysisConfig& config,
                                 std::uint64_t seed);

struct MetricsRow {
    Dgp dgp = Dgp::binary;
    Eigen::Index n = 0;
    std::string region;  // "v" or "vc"
    double bias = 0.0;
    double variance = 0.0;  // population variance across reps so mse = bias^2 + variance
    double mse = 0.0;
    double coverage = 0.0;
    DetectionStats detection;         // per-rep averaged
    DetectionStats detection_pooled;  // single confusion matrix over all reps
    int failed_reps = 0;
    int reps = 0;
};

std::vector<MetricsRow> summarize_reps(Dgp dgp, Eigen::Index n,
                                       const std::vector<RepOutcome>& outcomes);

/// Full grid: per (n, rep) generate data, run the CV pipeline, score against
/// the analytic truth. Rep failures are excluded and counted, never silent.
std::vector<MetricsRow> run_sim_grid(const std::vector<Eigen::Index>& ns, int reps, Dgp dgp,
                                     const AnalysisConfig& config, std::uint64_t seed);

/// Desk-scale defaults for simulation runs: lean rosters, single-split trees.
AnalysisConfig default_sim_config();

}  // namespace shiftem
