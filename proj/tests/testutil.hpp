#pragma once

#include <Eigen/Dense>
#include <random>

#include "shiftem/dataset.hpp"
#include "shiftem/rng.hpp"

namespace testutil {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                     double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double lo = -1.0,
                                     double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

inline Eigen::VectorXd random_gaussian(Eigen::Index n, std::mt19937_64& rng, double mu = 0.0,
                                       double sd = 1.0) {
    std::normal_distribution<double> g(mu, sd);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

/// Small synthetic dataset with named roles for pipeline tests.
inline shiftem::Dataset toy_dataset(Eigen::Index n, std::uint64_t seed, bool with_interaction) {
    auto rng = shiftem::make_rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> unit(0.0, 1.0);
    shiftem::Dataset d;
    d.covariate_names = {"W1", "W2"};
    d.exposure_names = {"A1", "A2"};
    d.outcome_name = "Y";
    d.covariates.resize(n, 2);
    d.exposures.resize(n, 2);
    d.outcome.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.covariates(i, 0) = coin(rng) ? 1.0 : 0.0;
        d.covariates(i, 1) = unit(rng);
        d.exposures(i, 0) = 0.4 * d.covariates(i, 0) + unit(rng);
        d.exposures(i, 1) = unit(rng);
        const double inter = with_interaction ? 1.5 * d.exposures(i, 0) * d.covariates(i, 0) : 0.0;
        d.outcome(i) = 1.0 + d.exposures(i, 0) + 0.5 * d.exposures(i, 1) + 0.3 * d.covariates(i, 1) +
                       inter + 0.5 * unit(rng);
    }
    return d;
}

}  // namespace testutil
