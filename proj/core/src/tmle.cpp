#include "shiftem/tmle.hpp"

#include <algorithm>
#include <cmath>

#include "shiftem/errors.hpp"
#include "shiftem/rng.hpp"
#include "shiftem/stats.hpp"

namespace shiftem {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kScaleEps = 1e-6;

}  // namespace

Eigen::VectorXd QbarFit::predict(const Eigen::MatrixXd& design) const {
    Eigen::VectorXd out = fit.predict(design);
    if (scale == OutcomeScale::bounded_logit)
        for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = clamp_to(out(i), y_min, y_max);
    return out;
}

QbarFit fit_outcome_regression(const Dataset& data, const std::vector<LearnerSpec>& roster,
                               int inner_folds, std::uint64_t seed, OutcomeScale scale) {
    QbarFit q;
    q.scale = scale;
    q.y_min = data.outcome.minCoeff();
    q.y_max = data.outcome.maxCoeff();
    q.fit = fit_stacked(data.design(), data.outcome, Task::regression, roster, inner_folds, seed);
    return q;
}

Fluctuation tmle_fluctuate(const Eigen::VectorXd& qbar, const Eigen::VectorXd& clever,
                           const Eigen::VectorXd& y, OutcomeScale scale, double y_min,
                           double y_max) {
    Fluctuation f;
    f.scale = scale;
    f.y_min = y_min;
    f.y_max = y_max;
    if (scale == OutcomeScale::linear) {
        const double denom = clever.squaredNorm();
        if (!(denom > 0)) throw EstimationError("clever covariate identically zero");
        f.epsilon = clever.dot(y - qbar) / denom;
        return f;
    }

    const double range = y_max - y_min;
    if (!(range > 0)) throw EstimationError("degenerate outcome range for bounded_logit");
    const Eigen::Index n = y.size();
    Eigen::VectorXd ys(n), offset(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ys(i) = clamp_to((y(i) - y_min) / range, 0.0, 1.0);
        offset(i) = logit(clamp_to((qbar(i) - y_min) / range, kScaleEps, 1.0 - kScaleEps));
    }
    // One-dimensional offset logistic model; the score is strictly decreasing in
    // epsilon (H > 0), so Newton with a bisection safeguard converges.
    double lo = -30.0, hi = 30.0;
    double eps = 0.0;
    for (int it = 0; it < 200; ++it) {
        double s = 0.0, info = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = expit(offset(i) + eps * clever(i));
            s += clever(i) * (ys(i) - p);
            info += clever(i) * clever(i) * p * (1.0 - p);
        }
        if (std::abs(s) < 1e-12 * static_cast<double>(n)) break;
        if (s > 0) lo = eps;
        else hi = eps;
        double next = info > 0 ? eps + s / info : 0.5 * (lo + hi);
        if (next <= lo || next >= hi) next = 0.5 * (lo + hi);
        if (std::abs(next - eps) < 1e-14) break;
        eps = next;
    }
    f.epsilon = eps;
    return f;
}

Eigen::VectorXd apply_fluctuation(const Fluctuation& f, const Eigen::VectorXd& qbar,
                                  const Eigen::VectorXd& clever) {
    if (f.scale == OutcomeScale::linear) return qbar + f.epsilon * clever;
    const double range = f.y_max - f.y_min;
    Eigen::VectorXd out(qbar.size());
    for (Eigen::Index i = 0; i < qbar.size(); ++i) {
        const double qs = clamp_to((qbar(i) - f.y_min) / range, kScaleEps, 1.0 - kScaleEps);
        out(i) = f.y_min + range * expit(logit(qs) + f.epsilon * clever(i));
    }
    return out;
}

double fluctuation_score(const Fluctuation& f, const Eigen::VectorXd& qstar,
                         const Eigen::VectorXd& clever, const Eigen::VectorXd& y) {
    if (f.scale == OutcomeScale::linear) return clever.dot(y - qstar);
    const double range = f.y_max - f.y_min;
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        s += clever(i) * ((y(i) - f.y_min) / range - (qstar(i) - f.y_min) / range);
    return s;
}

Eigen::MatrixXd EffectMatrices::uncentered() const {
    Eigen::MatrixXd u = ice;
    for (Eigen::Index k = 0; k < u.cols(); ++k) u.col(k).array() += marginal_psi(k);
    return u;
}

Eigen::VectorXd compute_iie(const QbarFit& qbar, const Fluctuation& fluct, const RatioModel& ratio,
                            const Dataset& data, int exposure_index, double delta) {
    const Eigen::MatrixXd design = data.design();
    const Eigen::VectorXd q_obs = qbar.predict(design);
    const Eigen::VectorXd h_obs = ratio.evaluate(data, 0.0).ratios;
    const Eigen::VectorXd qstar_obs = apply_fluctuation(fluct, q_obs, h_obs);

    Eigen::MatrixXd shifted = design;
    shifted.col(exposure_index).array() -= delta;
    const Eigen::VectorXd q_shift = qbar.predict(shifted);
    const Eigen::VectorXd h_shift = ratio.evaluate(data, delta).ratios;
    const Eigen::VectorXd qstar_shift = apply_fluctuation(fluct, q_shift, h_shift);

    return qstar_shift - qstar_obs;
}

Eigen::VectorXd compute_ice(const Eigen::VectorXd& clever, const Eigen::VectorXd& residual,
                            const Eigen::VectorXd& iie, double psi_hat) {
    return (clever.array() * residual.array() + iie.array() - psi_hat).matrix();
}

namespace {

EffectMatrices assemble_effects(const FirstStageFit& fs, const Dataset& data) {
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    EffectMatrices em;
    em.exposure_names = data.exposure_names;
    em.iie.resize(n, p);
    em.ice.resize(n, p);
    em.marginal_psi.resize(p);
    em.clamp_counts.assign(static_cast<std::size_t>(p), 0);

    const Eigen::MatrixXd design = data.design();
    const Eigen::VectorXd q_obs = fs.qbar.predict(design);

    for (Eigen::Index k = 0; k < p; ++k) {
        const RatioModel& ratio = fs.ratio_models[static_cast<std::size_t>(k)];
        const Fluctuation& fluct = fs.fluctuations[static_cast<std::size_t>(k)];
        const double delta = fs.deltas[static_cast<std::size_t>(k)];

        const RatioEstimate h_obs = ratio.evaluate(data, 0.0);
        em.clamp_counts[static_cast<std::size_t>(k)] = h_obs.clamp_count;
        const Eigen::VectorXd qstar_obs = apply_fluctuation(fluct, q_obs, h_obs.ratios);

        Eigen::MatrixXd shifted = design;
        shifted.col(k).array() -= delta;
        const Eigen::VectorXd q_shift = fs.qbar.predict(shifted);
        const Eigen::VectorXd h_shift = ratio.evaluate(data, delta).ratios;
        const Eigen::VectorXd qstar_shift = apply_fluctuation(fluct, q_shift, h_shift);

        em.iie.col(k) = qstar_shift - qstar_obs;
        const double psi = em.iie.col(k).mean();
        em.marginal_psi(k) = psi;
        em.ice.col(k) = compute_ice(h_obs.ratios, data.outcome - qstar_obs, em.iie.col(k), psi);
    }
    return em;
}

}  // namespace

EffectMatrices FirstStageFit::evaluate(const Dataset& data) const {
    return assemble_effects(*this, data);
}

FirstStageFit fit_first_stage(const Dataset& data, const ShiftSpec& resolved_spec,
                              const AnalysisConfig& config, std::uint64_t seed) {
    FirstStageFit fs;
    const Eigen::Index p = data.p();
    fs.deltas.resize(static_cast<std::size_t>(p));
    for (Eigen::Index k = 0; k < p; ++k) {
        const auto it = resolved_spec.per_exposure_delta.find(data.exposure_names[static_cast<std::size_t>(k)]);
        if (it == resolved_spec.per_exposure_delta.end())
            throw ConfigError("shift spec does not cover exposure '" +
                              data.exposure_names[static_cast<std::size_t>(k)] + "'");
        fs.deltas[static_cast<std::size_t>(k)] = it->second;
    }

    fs.qbar = fit_outcome_regression(data, config.outcome_roster, config.inner_folds,
                                     derive_seed(seed, 0x0BA5u), config.scale);
    const Eigen::VectorXd q_obs = fs.qbar.predict(data.design());
    const RatioBounds bounds{config.ratio_lo, config.ratio_hi};

    fs.ratio_models.reserve(static_cast<std::size_t>(p));
    fs.fluctuations.reserve(static_cast<std::size_t>(p));
    for (Eigen::Index k = 0; k < p; ++k) {
        const std::string& name = data.exposure_names[static_cast<std::size_t>(k)];
        try {
            RatioModel ratio = fit_ratio_classifier(data, static_cast<int>(k),
                                                    fs.deltas[static_cast<std::size_t>(k)],
                                                    config.ratio_roster, config.inner_folds, bounds,
                                                    derive_seed(seed, 0x4A71u, static_cast<std::uint64_t>(k)));
            const Eigen::VectorXd h_obs = ratio.evaluate(data, 0.0).ratios;
            fs.fluctuations.push_back(tmle_fluctuate(q_obs, h_obs, data.outcome, config.scale,
                                                     fs.qbar.y_min, fs.qbar.y_max));
            fs.ratio_models.push_back(std::move(ratio));
        } catch (const std::exception& e) {
            throw EstimationError("exposure '" + name + "': " + e.what());
        }
    }

    fs.train_effects = assemble_effects(fs, data);
    return fs;
}

EffectMatrices first_stage(const Dataset& data, const ShiftSpec& spec,
                           const AnalysisConfig& config) {
    const ShiftSpec resolved = resolve_shift(data, spec);
    return fit_first_stage(data, resolved, config, config.seed).train_effects;
}

}  // namespace shiftem
