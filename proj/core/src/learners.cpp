#include "shiftem/learners.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "shiftem/errors.hpp"
#include "shiftem/rng.hpp"
#include "shiftem/stats.hpp"
#include "shiftem/tree.hpp"

namespace shiftem {

namespace {

double clip_prob(double p) { return clamp_to(p, kProbEps, 1.0 - kProbEps); }

Eigen::VectorXd clip_probs(Eigen::VectorXd v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = clip_prob(v(i));
    return v;
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Optional pairwise interaction expansion shared by the linear learners.
Eigen::MatrixXd expand_design(const Eigen::MatrixXd& X, bool interactions) {
    if (!interactions) return X;
    const Eigen::Index p = X.cols();
    Eigen::MatrixXd out(X.rows(), p + p * (p - 1) / 2);
    out.leftCols(p) = X;
    Eigen::Index c = p;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i + 1; j < p; ++j) out.col(c++) = X.col(i).cwiseProduct(X.col(j));
    return out;
}

class InterceptLearner final : public BaseLearner {
   public:
    void fit(const Eigen::MatrixXd&, const Eigen::VectorXd& y, Task task, std::uint64_t) override {
        task_ = task;
        value_ = y.size() > 0 ? y.mean() : 0.0;
        if (task == Task::probability) value_ = clip_prob(value_);
    }
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        return Eigen::VectorXd::Constant(X.rows(), value_);
    }
    std::unique_ptr<BaseLearner> fresh_clone() const override {
        return std::make_unique<InterceptLearner>();
    }

   private:
    double value_ = 0.0;
    Task task_ = Task::regression;
};

class LinearOlsLearner final : public BaseLearner {
   public:
    explicit LinearOlsLearner(const LearnerSpec& spec)
        : interactions_(spec.get("interactions", 0.0) != 0.0) {}

    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task, std::uint64_t) override {
        task_ = task;
        const Eigen::MatrixXd Z = with_intercept(expand_design(X, interactions_));
        Eigen::MatrixXd gram = Z.transpose() * Z;
        const Eigen::VectorXd rhs = Z.transpose() * y;
        Eigen::LDLT<Eigen::MatrixXd> solver(gram);
        beta_ = solver.solve(rhs);
        const double resid = (Z * beta_ - y).squaredNorm();
        const double direct = (y - Eigen::VectorXd::Constant(y.size(), y.mean())).squaredNorm();
        if (solver.info() != Eigen::Success || !beta_.allFinite() || resid > direct * (1.0 + 1e-8) + 1e-8) {
            // Singular design: ridge-stabilized solve, reported rather than fatal.
            const double ridge = 1e-8 * (gram.trace() / gram.rows() + 1.0);
            gram.diagonal().array() += ridge;
            beta_ = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(rhs);
            std::cerr << "shiftem: linear_ols hit a singular design, used ridge-stabilized solve\n";
        }
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        Eigen::VectorXd out = with_intercept(expand_design(X, interactions_)) * beta_;
        if (task_ == Task::probability) out = clip_probs(std::move(out));
        return out;
    }

    std::unique_ptr<BaseLearner> fresh_clone() const override {
        LearnerSpec spec;
        spec.id = LearnerId::linear_ols;
        if (interactions_) spec.hyper["interactions"] = 1.0;
        return std::make_unique<LinearOlsLearner>(spec);
    }

   private:
    static Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
        Eigen::MatrixXd Z(X.rows(), X.cols() + 1);
        Z.col(0).setOnes();
        Z.rightCols(X.cols()) = X;
        return Z;
    }

    bool interactions_ = false;
    Task task_ = Task::regression;
    Eigen::VectorXd beta_;
};

class LogisticGlmLearner final : public BaseLearner {
   public:
    explicit LogisticGlmLearner(const LearnerSpec& spec)
        : interactions_(spec.get("interactions", 0.0) != 0.0),
          max_iter_(static_cast<int>(spec.get("max_iter", 50))) {}

    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task, std::uint64_t) override {
        if (task != Task::probability)
            throw EstimationError("logistic_glm requires a probability task");
        const Eigen::MatrixXd Z = with_intercept(expand_design(X, interactions_));
        const Eigen::Index d = Z.cols();
        beta_ = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd eta = Eigen::VectorXd::Zero(Z.rows());
        for (int it = 0; it < max_iter_; ++it) {
            Eigen::VectorXd p(Z.rows()), w(Z.rows());
            for (Eigen::Index i = 0; i < Z.rows(); ++i) {
                p(i) = expit(eta(i));
                w(i) = std::max(p(i) * (1.0 - p(i)), 1e-10);
            }
            Eigen::MatrixXd gram = Z.transpose() * w.asDiagonal() * Z;
            gram.diagonal().array() += 1e-8;  // ridge stabilizer
            const Eigen::VectorXd grad = Z.transpose() * (y - p);
            const Eigen::VectorXd step = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(grad);
            if (!step.allFinite()) break;
            beta_ += step;
            eta = Z * beta_;
            if (step.cwiseAbs().maxCoeff() < 1e-10) break;
        }
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        Eigen::VectorXd eta = with_intercept(expand_design(X, interactions_)) * beta_;
        for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = clip_prob(expit(eta(i)));
        return eta;
    }

    std::unique_ptr<BaseLearner> fresh_clone() const override {
        LearnerSpec spec;
        spec.id = LearnerId::logistic_glm;
        if (interactions_) spec.hyper["interactions"] = 1.0;
        spec.hyper["max_iter"] = max_iter_;
        return std::make_unique<LogisticGlmLearner>(spec);
    }

   private:
    static Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
        Eigen::MatrixXd Z(X.rows(), X.cols() + 1);
        Z.col(0).setOnes();
        Z.rightCols(X.cols()) = X;
        return Z;
    }

    bool interactions_ = false;
    int max_iter_ = 50;
    Eigen::VectorXd beta_;
};

class RegressionTreeLearner final : public BaseLearner {
   public:
    explicit RegressionTreeLearner(const LearnerSpec& spec) {
        params_.max_depth = static_cast<int>(spec.get("depth", 6));
        params_.min_leaf = static_cast<int>(spec.get("min_leaf", 5));
    }

    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task, std::uint64_t) override {
        task_ = task;
        tree_ = fit_tree(X, y, params_);
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        Eigen::VectorXd out = tree_.predict(X);
        if (task_ == Task::probability) out = clip_probs(std::move(out));
        return out;
    }

    std::unique_ptr<BaseLearner> fresh_clone() const override {
        LearnerSpec spec;
        spec.id = LearnerId::regression_tree;
        spec.hyper["depth"] = params_.max_depth;
        spec.hyper["min_leaf"] = params_.min_leaf;
        return std::make_unique<RegressionTreeLearner>(spec);
    }

   private:
    TreeParams params_;
    Task task_ = Task::regression;
    RegressionTree tree_;
};

class GradientBoostedStumpsLearner final : public BaseLearner {
   public:
    explicit GradientBoostedStumpsLearner(const LearnerSpec& spec) {
        rounds_ = static_cast<int>(spec.get("rounds", 200));
        shrinkage_ = spec.get("shrinkage", 0.1);
        params_.max_depth = static_cast<int>(spec.get("depth", 2));
        params_.min_leaf = static_cast<int>(spec.get("min_leaf", 5));
    }

    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task, std::uint64_t) override {
        task_ = task;
        trees_.clear();
        const TreeBuilder builder(X);
        Eigen::VectorXd score(y.size());

        if (task == Task::regression) {
            base_ = y.mean();
            score.setConstant(base_);
            Eigen::VectorXd residual = y - score;
            for (int r = 0; r < rounds_; ++r) {
                RegressionTree tree = builder.build(residual, params_);
                if (tree.leaf_count() <= 1) break;  // nothing left to fit
                const auto& leaves = tree.leaf_rows();
                std::vector<double> values(leaves.size());
                for (std::size_t l = 0; l < leaves.size(); ++l) {
                    double s = 0.0;
                    for (int row : leaves[l]) s += residual(row);
                    values[l] = shrinkage_ * s / static_cast<double>(leaves[l].size());
                }
                tree.set_leaf_values(values);
                for (Eigen::Index i = 0; i < y.size(); ++i) {
                    const double step = tree.predict_row(X, i);
                    score(i) += step;
                    residual(i) -= step;
                }
                trees_.push_back(std::move(tree));
            }
        } else {
            // Newton boosting on the log-odds.
            base_ = logit(clip_prob(y.mean()));
            score.setConstant(base_);
            Eigen::VectorXd grad(y.size());
            for (int r = 0; r < rounds_; ++r) {
                Eigen::VectorXd p(y.size());
                for (Eigen::Index i = 0; i < y.size(); ++i) {
                    p(i) = expit(score(i));
                    grad(i) = y(i) - p(i);
                }
                RegressionTree tree = builder.build(grad, params_);
                if (tree.leaf_count() <= 1) break;
                const auto& leaves = tree.leaf_rows();
                std::vector<double> values(leaves.size());
                for (std::size_t l = 0; l < leaves.size(); ++l) {
                    double num = 0.0, den = 1e-10;
                    for (int row : leaves[l]) {
                        num += grad(row);
                        den += p(row) * (1.0 - p(row));
                    }
                    values[l] = shrinkage_ * num / den;
                }
                tree.set_leaf_values(values);
                for (Eigen::Index i = 0; i < y.size(); ++i) score(i) += tree.predict_row(X, i);
                trees_.push_back(std::move(tree));
            }
        }
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), base_);
        for (const auto& tree : trees_) out += tree.predict(X);
        if (task_ == Task::probability)
            for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = clip_prob(expit(out(i)));
        return out;
    }

    std::unique_ptr<BaseLearner> fresh_clone() const override {
        LearnerSpec spec;
        spec.id = LearnerId::gradient_boosted_stumps;
        spec.hyper["rounds"] = rounds_;
        spec.hyper["shrinkage"] = shrinkage_;
        spec.hyper["depth"] = params_.max_depth;
        spec.hyper["min_leaf"] = params_.min_leaf;
        return std::make_unique<GradientBoostedStumpsLearner>(spec);
    }

   private:
    int rounds_ = 200;
    double shrinkage_ = 0.1;
    TreeParams params_;
    Task task_ = Task::regression;
    double base_ = 0.0;
    std::vector<RegressionTree> trees_;
};

class KNearestLearner final : public BaseLearner {
   public:
    explicit KNearestLearner(const LearnerSpec& spec)
        : k_(static_cast<int>(spec.get("k", 10))) {}

    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task, std::uint64_t) override {
        task_ = task;
        mean_ = X.colwise().mean();
        sd_.resize(X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const double s = sample_sd(X.col(j));
            sd_(j) = s > 0 ? s : 1.0;
        }
        train_ = standardize(X);
        y_ = y;
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        const Eigen::MatrixXd Q = standardize(X);
        const Eigen::Index n_train = train_.rows();
        const int k = std::min<int>(k_, static_cast<int>(n_train));
        Eigen::VectorXd out(Q.rows());
        std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n_train));
        for (Eigen::Index i = 0; i < Q.rows(); ++i) {
            for (Eigen::Index t = 0; t < n_train; ++t)
                dist[static_cast<std::size_t>(t)] = {(train_.row(t) - Q.row(i)).squaredNorm(),
                                                     static_cast<int>(t)};
            std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += y_(dist[static_cast<std::size_t>(j)].second);
            out(i) = acc / k;
            if (task_ == Task::probability) out(i) = clip_prob(out(i));
        }
        return out;
    }

    std::unique_ptr<BaseLearner> fresh_clone() const override {
        LearnerSpec spec;
        spec.id = LearnerId::k_nearest;
        spec.hyper["k"] = k_;
        return std::make_unique<KNearestLearner>(spec);
    }

   private:
    Eigen::MatrixXd standardize(const Eigen::MatrixXd& X) const {
        Eigen::MatrixXd Z = X;
        for (Eigen::Index j = 0; j < Z.cols(); ++j)
            Z.col(j) = (Z.col(j).array() - mean_(j)) / sd_(j);
        return Z;
    }

    int k_ = 10;
    Task task_ = Task::regression;
    Eigen::RowVectorXd mean_;
    Eigen::VectorXd sd_;
    Eigen::MatrixXd train_;
    Eigen::VectorXd y_;
};

}  // namespace

std::unique_ptr<BaseLearner> make_learner(const LearnerSpec& spec) {
    switch (spec.id) {
        case LearnerId::intercept_only: return std::make_unique<InterceptLearner>();
        case LearnerId::linear_ols: return std::make_unique<LinearOlsLearner>(spec);
        case LearnerId::logistic_glm: return std::make_unique<LogisticGlmLearner>(spec);
        case LearnerId::regression_tree: return std::make_unique<RegressionTreeLearner>(spec);
        case LearnerId::gradient_boosted_stumps:
            return std::make_unique<GradientBoostedStumpsLearner>(spec);
        case LearnerId::k_nearest: return std::make_unique<KNearestLearner>(spec);
    }
    throw ConfigError("unknown learner id");
}

namespace {

double risk_squared(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
    return (pred - y).squaredNorm() / static_cast<double>(y.size());
}

double risk_logloss(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double p = clip_prob(pred(i));
        acc += y(i) > 0.5 ? -std::log(p) : -std::log(1.0 - p);
    }
    return acc / static_cast<double>(y.size());
}

double blend_risk(const Eigen::MatrixXd& Z, const Eigen::VectorXd& w, const Eigen::VectorXd& y,
                  Task task) {
    const Eigen::VectorXd pred = Z * w;
    return task == Task::regression ? risk_squared(pred, y) : risk_logloss(pred, y);
}

/// Inner-fold assignment: shuffled round-robin, deterministic in seed.
std::vector<int> fold_of(Eigen::Index n, int folds, std::uint64_t seed) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    auto rng = make_rng(derive_seed(seed, 0x1F01D5u));
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<int> assignment(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < ids.size(); ++i)
        assignment[static_cast<std::size_t>(ids[i])] = static_cast<int>(i % static_cast<std::size_t>(folds));
    return assignment;
}

}  // namespace

Eigen::VectorXd nnls(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y) {
    // Lawson-Hanson active set; dimensions here are tiny (one column per learner).
    const Eigen::Index m = Z.cols();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    std::vector<bool> active(static_cast<std::size_t>(m), false);
    for (int iter = 0; iter < 30 * static_cast<int>(m) + 30; ++iter) {
        const Eigen::VectorXd grad = Z.transpose() * (y - Z * w);
        int best = -1;
        double best_grad = 1e-10;
        for (Eigen::Index j = 0; j < m; ++j)
            if (!active[static_cast<std::size_t>(j)] && grad(j) > best_grad) {
                best_grad = grad(j);
                best = static_cast<int>(j);
            }
        if (best < 0) break;
        active[static_cast<std::size_t>(best)] = true;

        while (true) {
            std::vector<int> idx;
            for (Eigen::Index j = 0; j < m; ++j)
                if (active[static_cast<std::size_t>(j)]) idx.push_back(static_cast<int>(j));
            Eigen::MatrixXd Zp(Z.rows(), static_cast<Eigen::Index>(idx.size()));
            for (std::size_t c = 0; c < idx.size(); ++c) Zp.col(static_cast<Eigen::Index>(c)) = Z.col(idx[c]);
            Eigen::MatrixXd gram = Zp.transpose() * Zp;
            gram.diagonal().array() += 1e-12;
            const Eigen::VectorXd s = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(Zp.transpose() * y);

            double alpha = 1.0;
            for (std::size_t c = 0; c < idx.size(); ++c) {
                if (s(static_cast<Eigen::Index>(c)) <= 0) {
                    const double wj = w(idx[c]);
                    const double denom = wj - s(static_cast<Eigen::Index>(c));
                    if (denom > 0) alpha = std::min(alpha, wj / denom);
                }
            }
            if (alpha >= 1.0) {
                for (std::size_t c = 0; c < idx.size(); ++c) w(idx[c]) = s(static_cast<Eigen::Index>(c));
                break;
            }
            for (std::size_t c = 0; c < idx.size(); ++c)
                w(idx[c]) += alpha * (s(static_cast<Eigen::Index>(c)) - w(idx[c]));
            for (std::size_t c = 0; c < idx.size(); ++c)
                if (w(idx[c]) <= 1e-12) {
                    w(idx[c]) = 0.0;
                    active[static_cast<std::size_t>(idx[c])] = false;
                }
        }
    }
    return w;
}

namespace {

/// Frank-Wolfe polish on the simplex from a feasible start; monotone by exact
/// line search, so the result never falls below the start point.
Eigen::VectorXd frank_wolfe_polish(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                   Eigen::VectorXd w, int iters) {
    const double n = static_cast<double>(y.size());
    for (int t = 0; t < iters; ++t) {
        const Eigen::VectorXd resid = Z * w - y;
        const Eigen::VectorXd grad = 2.0 / n * (Z.transpose() * resid);
        Eigen::Index corner;
        grad.minCoeff(&corner);
        Eigen::VectorXd dir = -w;
        dir(corner) += 1.0;
        const Eigen::VectorXd zd = Z * dir;
        const double denom = zd.squaredNorm();
        if (denom <= 0) break;
        double gamma = -(resid.dot(zd)) / denom;
        gamma = clamp_to(gamma, 0.0, 1.0);
        if (gamma <= 1e-14) break;
        w += gamma * dir;
    }
    return w;
}

}  // namespace

Eigen::VectorXd simplex_weights_squared(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y) {
    const Eigen::Index m = Z.cols();
    Eigen::VectorXd w = nnls(Z, y);
    const double total = w.sum();
    if (total > 1e-12) w /= total;
    else w = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));

    // Best corner is always feasible; start the polish from the better point so
    // the blend risk can never exceed the best single learner's.
    Eigen::Index best_corner = 0;
    double best_corner_risk = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
        const double r = risk_squared(Z.col(j), y);
        if (r < best_corner_risk) {
            best_corner_risk = r;
            best_corner = j;
        }
    }
    if (blend_risk(Z, w, y, Task::regression) > best_corner_risk) {
        w.setZero();
        w(best_corner) = 1.0;
    }
    w = frank_wolfe_polish(Z, y, std::move(w), 200);
    if (blend_risk(Z, w, y, Task::regression) > best_corner_risk) {
        w.setZero();
        w(best_corner) = 1.0;
    }
    return w;
}

Eigen::VectorXd simplex_weights_logloss(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y) {
    // Exponentiated-gradient descent, 500 iterations, step 0.1, best iterate kept.
    const Eigen::Index m = Z.cols();
    const double n = static_cast<double>(y.size());
    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    Eigen::VectorXd best_w = w;
    double best_risk = blend_risk(Z, w, y, Task::probability);
    for (int t = 0; t < 500; ++t) {
        const Eigen::VectorXd pred = Z * w;
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(m);
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double p = clip_prob(pred(i));
            const double dldp = (y(i) > 0.5 ? -1.0 / p : 1.0 / (1.0 - p)) / n;
            grad += dldp * Z.row(i).transpose();
        }
        for (Eigen::Index j = 0; j < m; ++j) w(j) *= std::exp(-0.1 * grad(j));
        w /= w.sum();
        const double risk = blend_risk(Z, w, y, Task::probability);
        if (risk < best_risk) {
            best_risk = risk;
            best_w = w;
        }
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        const double corner_risk = risk_logloss(Z.col(j), y);
        if (corner_risk < best_risk) {
            best_risk = corner_risk;
            best_w.setZero();
            best_w(j) = 1.0;
        }
    }
    return best_w;
}

Eigen::VectorXd StackedFit::predict(const Eigen::MatrixXd& X) const {
    if (X.cols() != n_features) throw DataError("prediction column count does not match training");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (std::size_t l = 0; l < base_fits.size(); ++l) {
        const double w = weights(static_cast<Eigen::Index>(l));
        if (w <= 0.0 || !base_fits[l]) continue;
        out += w * base_fits[l]->predict(X);
    }
    if (task == Task::probability) out = clip_probs(std::move(out));
    return out;
}

StackedFit fit_stacked(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task,
                       const std::vector<LearnerSpec>& roster, int inner_folds,
                       std::uint64_t seed) {
    if (X.rows() != y.size()) throw DataError("X rows and y length disagree");
    if (roster.empty()) throw ConfigError("learner roster is empty");
    if (inner_folds < 2) throw ConfigError("inner_folds must be >= 2");
    const Eigen::Index n = X.rows();
    const int folds = static_cast<int>(std::min<Eigen::Index>(inner_folds, n));
    const std::size_t m = roster.size();

    const std::vector<int> assignment = fold_of(n, folds, seed);
    std::vector<std::vector<Eigen::Index>> holdout(static_cast<std::size_t>(folds));
    for (Eigen::Index i = 0; i < n; ++i)
        holdout[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])].push_back(i);

    Eigen::MatrixXd Zcv(n, static_cast<Eigen::Index>(m));
    std::vector<bool> failed(m, false);

    for (std::size_t l = 0; l < m; ++l) {
        const std::uint64_t learner_seed = derive_seed(seed, l);
        try {
            for (int f = 0; f < folds; ++f) {
                const auto& hold = holdout[static_cast<std::size_t>(f)];
                std::vector<Eigen::Index> train_rows;
                train_rows.reserve(static_cast<std::size_t>(n) - hold.size());
                for (Eigen::Index i = 0; i < n; ++i)
                    if (assignment[static_cast<std::size_t>(i)] != f) train_rows.push_back(i);
                Eigen::MatrixXd Xt(static_cast<Eigen::Index>(train_rows.size()), X.cols());
                Eigen::VectorXd yt(static_cast<Eigen::Index>(train_rows.size()));
                for (std::size_t r = 0; r < train_rows.size(); ++r) {
                    Xt.row(static_cast<Eigen::Index>(r)) = X.row(train_rows[r]);
                    yt(static_cast<Eigen::Index>(r)) = y(train_rows[r]);
                }
                Eigen::MatrixXd Xh(static_cast<Eigen::Index>(hold.size()), X.cols());
                for (std::size_t r = 0; r < hold.size(); ++r)
                    Xh.row(static_cast<Eigen::Index>(r)) = X.row(hold[r]);

                auto learner = make_learner(roster[l]);
                learner->fit(Xt, yt, task, derive_seed(learner_seed, static_cast<std::uint64_t>(f)));
                const Eigen::VectorXd pred = learner->predict(Xh);
                for (std::size_t r = 0; r < hold.size(); ++r) Zcv(hold[r], static_cast<Eigen::Index>(l)) = pred(static_cast<Eigen::Index>(r));
            }
        } catch (const std::exception&) {
            failed[l] = true;
            Zcv.col(static_cast<Eigen::Index>(l)).setConstant(task == Task::probability ? 0.5 : y.mean());
        }
    }

    std::vector<std::size_t> ok;
    for (std::size_t l = 0; l < m; ++l)
        if (!failed[l]) ok.push_back(l);
    if (ok.empty()) throw EstimationError("all learners failed during stacking");

    StackedFit fit;
    fit.roster = roster;
    fit.task = task;
    fit.n_features = X.cols();
    fit.cv_risks.resize(static_cast<Eigen::Index>(m));
    for (std::size_t l = 0; l < m; ++l) {
        fit.cv_risks(static_cast<Eigen::Index>(l)) =
            failed[l] ? std::numeric_limits<double>::infinity()
                      : (task == Task::regression ? risk_squared(Zcv.col(static_cast<Eigen::Index>(l)), y)
                                                  : risk_logloss(Zcv.col(static_cast<Eigen::Index>(l)), y));
    }

    Eigen::MatrixXd Zok(n, static_cast<Eigen::Index>(ok.size()));
    for (std::size_t c = 0; c < ok.size(); ++c)
        Zok.col(static_cast<Eigen::Index>(c)) = Zcv.col(static_cast<Eigen::Index>(ok[c]));
    const Eigen::VectorXd w_ok = task == Task::regression ? simplex_weights_squared(Zok, y)
                                                          : simplex_weights_logloss(Zok, y);
    fit.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t c = 0; c < ok.size(); ++c)
        fit.weights(static_cast<Eigen::Index>(ok[c])) = w_ok(static_cast<Eigen::Index>(c));

    fit.base_fits.resize(m);
    for (std::size_t l = 0; l < m; ++l) {
        if (failed[l] || fit.weights(static_cast<Eigen::Index>(l)) <= 0.0) continue;
        auto learner = make_learner(roster[l]);
        learner->fit(X, y, task, derive_seed(seed, l, 0xF1FA1u));
        fit.base_fits[l] = std::move(learner);
    }
    return fit;
}

}  // namespace shiftem
