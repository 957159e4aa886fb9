#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "shiftem/dataset.hpp"
#include "shiftem/density_ratio.hpp"
#include "shiftem/learners.hpp"

namespace shiftem {

struct QbarFit {
    StackedFit fit;  // regression of Y on [exposures | covariates]
    double y_min = 0.0;
    double y_max = 0.0;
    OutcomeScale scale = OutcomeScale::linear;

    Eigen::VectorXd predict(const Eigen::MatrixXd& design) const;
};

QbarFit fit_outcome_regression(const Dataset& data, const std::vector<LearnerSpec>& roster,
                               int inner_folds, std::uint64_t seed,
                               OutcomeScale scale = OutcomeScale::linear);

/// One-parameter fluctuation of an initial outcome fit along the clever
/// covariate H. Linear scale solves epsilon in closed form; bounded_logit runs
/// the offset logistic update on the min-max scaled outcome.
struct Fluctuation {
    double epsilon = 0.0;
    OutcomeScale scale = OutcomeScale::linear;
    double y_min = 0.0;
    double y_max = 1.0;
};

Fluctuation tmle_fluctuate(const Eigen::VectorXd& qbar, const Eigen::VectorXd& clever,
                           const Eigen::VectorXd& y, OutcomeScale scale, double y_min,
                           double y_max);

/// Q*(point) = fluctuated prediction given the initial prediction and H at that point.
Eigen::VectorXd apply_fluctuation(const Fluctuation& f, const Eigen::VectorXd& qbar,
                                  const Eigen::VectorXd& clever);

/// Targeting score after the update: sum_i H_i (Y_i - Q*_i) on the fluctuation's
/// working scale (raw Y for linear, min-max scaled Y for bounded_logit).
double fluctuation_score(const Fluctuation& f, const Eigen::VectorXd& qstar,
                         const Eigen::VectorXd& clever, const Eigen::VectorXd& y);

struct EffectMatrices {
    Eigen::MatrixXd iie;           // n x p, per-row predicted outcome change under the shift
    Eigen::MatrixXd ice;           // n x p, influence values centered at each column's psi
    Eigen::VectorXd marginal_psi;  // p, column means of iie (plug-in identity, exact)
    std::vector<std::string> exposure_names;
    std::vector<std::size_t> clamp_counts;  // per exposure, from ratio estimation

    /// Uncentered influence contribution u = H*(Y - Q*) + IIE = ice + psi.
    Eigen::MatrixXd uncentered() const;
};

/// First-stage fit for one training sample: shared outcome regression plus a
/// ratio model and fluctuation per exposure. evaluate() reuses the trained
/// models on any rows (the validation half of a CV fold).
struct FirstStageFit {
    QbarFit qbar;
    std::vector<RatioModel> ratio_models;  // one per exposure column
    std::vector<Fluctuation> fluctuations;
    std::vector<double> deltas;  // raw units, exposure column order
    EffectMatrices train_effects;

    EffectMatrices evaluate(const Dataset& data) const;
};

FirstStageFit fit_first_stage(const Dataset& data, const ShiftSpec& resolved_spec,
                              const AnalysisConfig& config, std::uint64_t seed);

/// Spec-level convenience: run the first stage and return the effect matrices.
EffectMatrices first_stage(const Dataset& data, const ShiftSpec& spec,
                           const AnalysisConfig& config);

/// Per-row IIE for one exposure given a fluctuated fit; exposed for unit tests.
Eigen::VectorXd compute_iie(const QbarFit& qbar, const Fluctuation& fluct,
                            const RatioModel& ratio, const Dataset& data, int exposure_index,
                            double delta);

/// Per-row ICE phi = H*(Y - Q*) + iie - psi_hat, psi_hat = mean(iie).
Eigen::VectorXd compute_ice(const Eigen::VectorXd& clever, const Eigen::VectorXd& residual,
                            const Eigen::VectorXd& iie, double psi_hat);

}  // namespace shiftem
