#include "shiftem/density_ratio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shiftem/errors.hpp"
#include "shiftem/rng.hpp"
#include "shiftem/stats.hpp"
#include "shiftem/tree.hpp"

namespace shiftem {

namespace {

RatioEstimate clamp_ratios(Eigen::VectorXd raw, const RatioBounds& bounds, RatioMethod method) {
    RatioEstimate est;
    est.method = method;
    est.clamp_count = 0;
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        if (raw(i) < bounds.lo || raw(i) > bounds.hi) ++est.clamp_count;
        raw(i) = clamp_to(raw(i), bounds.lo, bounds.hi);
    }
    est.ratios = std::move(raw);
    return est;
}

}  // namespace

RatioEstimate RatioModel::evaluate(const Dataset& data, double eval_shift) const {
    Eigen::MatrixXd design = data.design();
    if (eval_shift != 0.0) design.col(exposure_index).array() -= eval_shift;
    const Eigen::VectorXd p = classifier.predict(design);
    Eigen::VectorXd raw(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) raw(i) = p(i) / (1.0 - p(i));
    return clamp_ratios(std::move(raw), bounds, RatioMethod::classification);
}

RatioModel fit_ratio_classifier(const Dataset& data, int exposure_index, double delta,
                                const std::vector<LearnerSpec>& roster, int inner_folds,
                                const RatioBounds& bounds, std::uint64_t seed) {
    const Eigen::Index n = data.n();
    const Eigen::MatrixXd design = data.design();

    // 2n-row augmented sample: originals labeled Z=0, duplicates with the
    // exposure column moved to A_k + delta labeled Z=1, so a Z=1 row at value a
    // carries density g(a - delta | w). A_-k and W stay untouched.
    Eigen::MatrixXd aug(2 * n, design.cols());
    aug.topRows(n) = design;
    aug.bottomRows(n) = design;
    aug.col(exposure_index).tail(n).array() += delta;
    Eigen::VectorXd label(2 * n);
    label.head(n).setZero();
    label.tail(n).setOnes();

    RatioModel model;
    model.exposure_index = exposure_index;
    model.delta = delta;
    model.bounds = bounds;
    model.classifier = fit_stacked(aug, label, Task::probability, roster, inner_folds, seed);

    const Eigen::VectorXd check = model.classifier.predict(design);
    const double lo = check.minCoeff(), hi = check.maxCoeff();
    if (hi <= kProbEps || lo >= 1.0 - kProbEps)
        throw EstimationError("separable augmentation: degenerate ratio classifier");
    return model;
}

RatioEstimate estimate_ratio_classification(const Dataset& data, const std::string& exposure,
                                            double delta, const std::vector<LearnerSpec>& roster,
                                            int inner_folds, const RatioBounds& bounds,
                                            std::uint64_t seed) {
    const int idx = data.exposure_index(exposure);
    if (idx < 0) throw ConfigError("unknown exposure '" + exposure + "'");
    return fit_ratio_classifier(data, idx, delta, roster, inner_folds, bounds, seed).evaluate(data);
}

double analytic_gaussian_ratio(double a, double mu, double sigma, double delta) {
    if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
    return std::exp((2.0 * delta * (a - mu) - delta * delta) / (2.0 * sigma * sigma));
}

RatioEstimate estimate_ratio_direct(const Dataset& data, const std::string& exposure, double delta,
                                    int bins, const RatioBounds& bounds, std::uint64_t seed) {
    (void)seed;  // the stratifier is deterministic; parameter kept for interface parity
    if (bins < 5) throw ConfigError("direct ratio estimation needs bins >= 5");
    const int idx = data.exposure_index(exposure);
    if (idx < 0) throw ConfigError("unknown exposure '" + exposure + "'");
    const Eigen::Index n = data.n();
    const Eigen::VectorXd a = data.exposures.col(idx);

    // Shallow tree on W pools rows into strata by the exposure's conditional mean.
    TreeParams params;
    params.max_depth = 2;
    params.min_leaf = static_cast<int>(std::max<Eigen::Index>(30, n / 20));
    RegressionTree strata;
    std::vector<int> leaf_of(static_cast<std::size_t>(n), 0);
    int n_leaves = 1;
    if (data.q() > 0) {
        strata = fit_tree(data.covariates, a, params);
        n_leaves = strata.leaf_count();
        for (Eigen::Index i = 0; i < n; ++i)
            leaf_of[static_cast<std::size_t>(i)] = strata.leaf_index(data.covariates, i);
    }

    struct Hist {
        double lo = 0.0, width = 0.0;
        std::vector<double> density;
        long count = 0;

        double at(double x) const {
            if (count == 0) return 0.0;
            if (width <= 0.0) return x == lo ? 1.0 : 0.0;  // degenerate: point mass
            const double pos = (x - lo) / width;
            if (pos < 0.0) return 0.0;
            auto b = static_cast<long>(pos);
            if (b >= static_cast<long>(density.size())) {
                if (x <= lo + width * static_cast<double>(density.size())) b = static_cast<long>(density.size()) - 1;
                else return 0.0;
            }
            return density[static_cast<std::size_t>(b)];
        }
    };

    std::vector<Hist> hists(static_cast<std::size_t>(n_leaves));
    for (int l = 0; l < n_leaves; ++l) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        long count = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (leaf_of[static_cast<std::size_t>(i)] != l) continue;
            lo = std::min(lo, a(i));
            hi = std::max(hi, a(i));
            ++count;
        }
        Hist& h = hists[static_cast<std::size_t>(l)];
        h.count = count;
        if (count == 0) continue;
        h.lo = lo;
        h.width = (hi - lo) / static_cast<double>(bins);
        if (h.width <= 0.0) continue;
        std::vector<long> tally(static_cast<std::size_t>(bins), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (leaf_of[static_cast<std::size_t>(i)] != l) continue;
            auto b = static_cast<long>((a(i) - lo) / h.width);
            b = std::min<long>(b, bins - 1);
            ++tally[static_cast<std::size_t>(b)];
        }
        h.density.resize(static_cast<std::size_t>(bins));
        for (int b = 0; b < bins; ++b)
            h.density[static_cast<std::size_t>(b)] =
                static_cast<double>(tally[static_cast<std::size_t>(b)]) /
                (static_cast<double>(count) * h.width);
    }

    Eigen::VectorXd raw(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Hist& h = hists[static_cast<std::size_t>(leaf_of[static_cast<std::size_t>(i)])];
        const double num = h.at(a(i) - delta);
        const double den = h.at(a(i));
        if (den <= 0.0) {
            // Observed point always lands in its own bin, so this needs both
            // sides empty: fall back to the identity ratio.
            raw(i) = num <= 0.0 ? 1.0 : bounds.hi * 2.0;
        } else {
            raw(i) = num / den;  // num == 0 drops below lo and clamps there
        }
    }
    return clamp_ratios(std::move(raw), bounds, RatioMethod::direct);
}

}  // namespace shiftem
