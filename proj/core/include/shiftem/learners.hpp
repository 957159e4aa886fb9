#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "shiftem/config.hpp"

namespace shiftem {

enum class Task { regression, probability };

inline constexpr double kProbEps = 1e-6;

class BaseLearner {
   public:
    virtual ~BaseLearner() = default;
    virtual void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task,
                     std::uint64_t seed) = 0;
    virtual Eigen::VectorXd predict(const Eigen::MatrixXd& X) const = 0;
    virtual std::unique_ptr<BaseLearner> fresh_clone() const = 0;
};

std::unique_ptr<BaseLearner> make_learner(const LearnerSpec& spec);

/// Convex-weight stacking ensemble. Weights are nonnegative, sum to one, and
/// the inner-CV risk of the blend never exceeds the best single learner's.
struct StackedFit {
    std::vector<std::unique_ptr<BaseLearner>> base_fits;
    std::vector<LearnerSpec> roster;
    Eigen::VectorXd weights;
    Eigen::VectorXd cv_risks;
    Task task = Task::regression;
    Eigen::Index n_features = 0;

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

StackedFit fit_stacked(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task,
                       const std::vector<LearnerSpec>& roster, int inner_folds,
                       std::uint64_t seed);

/// Simplex weight solvers, exposed for tests.
Eigen::VectorXd nnls(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y);
Eigen::VectorXd simplex_weights_squared(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y);
Eigen::VectorXd simplex_weights_logloss(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y);

}  // namespace shiftem
