#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "shiftem/dataset.hpp"
#include "shiftem/learners.hpp"

namespace shiftem {

enum class RatioMethod { classification, direct };

struct RatioBounds {
    double lo = 0.01;
    double hi = 100.0;
};

struct RatioEstimate {
    Eigen::VectorXd ratios;  // one per observation, all within bounds
    std::size_t clamp_count = 0;
    RatioMethod method = RatioMethod::classification;
};

/// Density-ratio model for one exposure: a probability classifier fit on the
/// 2n-row augmented sample (originals Z=0, duplicates with the exposure column
/// set to A_k + delta labeled Z=1). The fitted odds at the observed point equal
/// g(a - delta | w) / g(a | w); no prior correction since classes are balanced 1:1.
struct RatioModel {
    StackedFit classifier;
    int exposure_index = -1;
    double delta = 0.0;
    RatioBounds bounds;

    /// Ratios at (A_k - eval_shift, A_-k, W) for every row. eval_shift = 0 gives the
    /// observed-point clever covariate; eval_shift = delta the counterfactual one.
    RatioEstimate evaluate(const Dataset& data, double eval_shift = 0.0) const;
};

RatioModel fit_ratio_classifier(const Dataset& data, int exposure_index, double delta,
                                const std::vector<LearnerSpec>& roster, int inner_folds,
                                const RatioBounds& bounds, std::uint64_t seed);

RatioEstimate estimate_ratio_classification(const Dataset& data, const std::string& exposure,
                                            double delta, const std::vector<LearnerSpec>& roster,
                                            int inner_folds, const RatioBounds& bounds,
                                            std::uint64_t seed);

/// Closed-form ratio for A | W ~ Normal(mu, sigma^2):
/// exp((2*delta*(a - mu) - delta^2) / (2*sigma^2)). Testing oracle.
double analytic_gaussian_ratio(double a, double mu, double sigma, double delta);

/// Conditional-histogram estimate: a shallow tree on W pools rows into strata,
/// A_k is histogrammed within each stratum, and the ratio is evaluated at
/// A_k - delta over A_k. Retained for comparison against the classifier route.
RatioEstimate estimate_ratio_direct(const Dataset& data, const std::string& exposure,
                                    double delta, int bins, const RatioBounds& bounds,
                                    std::uint64_t seed);

}  // namespace shiftem
