#include "shiftem/cv.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "shiftem/errors.hpp"
#include "shiftem/parallel.hpp"
#include "shiftem/rng.hpp"
#include "shiftem/stats.hpp"
#include "shiftem/tmle.hpp"

namespace shiftem {

std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("folds must be >= 2");
    if (n < 2 * static_cast<Eigen::Index>(k))
        throw DataError("need at least 2 rows per fold: n=" + std::to_string(n) +
                        ", folds=" + std::to_string(k));
    std::vector<Eigen::Index> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    auto rng = make_rng(derive_seed(seed, 0xF01D5u));
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<std::vector<Eigen::Index>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < ids.size(); ++i)
        folds[i % static_cast<std::size_t>(k)].push_back(ids[i]);
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

DifferenceTest difference_test(double psi_v, double var_v, double psi_vc, double var_vc) {
    if (!(var_v > 0) || !(var_vc > 0))
        throw EstimationError("difference test needs positive variances");
    DifferenceTest t;
    t.diff = psi_v - psi_vc;
    t.se = std::sqrt(var_v + var_vc);
    t.z = t.diff / t.se;
    t.p_value = two_sided_p(t.z);
    return t;
}

std::pair<double, double> wald_ci(double psi, double se) {
    return {psi - 1.96 * se, psi + 1.96 * se};
}

namespace {

RegionEstimate region_estimate(const Eigen::VectorXd& iie, const Eigen::VectorXd& influence) {
    RegionEstimate est;
    est.n = iie.size();
    est.psi = iie.mean();
    est.variance = sample_variance(influence) / static_cast<double>(est.n);
    est.se = std::sqrt(est.variance);
    std::tie(est.ci_lo, est.ci_hi) = wald_ci(est.psi, est.se);
    est.p_value = est.se > 0 ? two_sided_p(est.psi / est.se) : 1.0;
    return est;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
    return out;
}

}  // namespace

FoldResult run_fold(const Dataset& train, const Dataset& valid, const ShiftSpec& resolved,
                    const AnalysisConfig& config, int fold_index,
                    const std::vector<Eigen::Index>& valid_ids) {
    FoldResult fr;
    fr.fold = fold_index;
    fr.valid_rows = valid_ids;

    const std::uint64_t fold_seed = derive_seed(config.seed, 0xF07Du, static_cast<std::uint64_t>(fold_index));
    const FirstStageFit fs = fit_first_stage(train, resolved, config, fold_seed);

    const int min_obs = config.resolved_min_obs(train.n());
    const auto selected = select_max_modifier(fs.train_effects, train.covariates,
                                              train.covariate_names, config, min_obs);

    const EffectMatrices ve = fs.evaluate(valid);
    const Eigen::MatrixXd vu = ve.uncentered();

    for (Eigen::Index k = 0; k < valid.p(); ++k) {
        MarginalEstimate m;
        m.exposure = valid.exposure_names[static_cast<std::size_t>(k)];
        m.psi = ve.marginal_psi(k);
        m.se = std::sqrt(sample_variance(vu.col(k)) / static_cast<double>(valid.n()));
        std::tie(m.ci_lo, m.ci_hi) = wald_ci(m.psi, m.se);
        fr.marginal.push_back(std::move(m));
    }

    fr.valid_iie = ve.iie;
    fr.valid_u = vu;

    if (selected) {
        fr.exposure = selected->exposure;
        fr.rule = selected->rule;
        fr.selected_exposure_index = valid.exposure_index(selected->exposure);
        fr.valid_in_v = selected->rule.membership(valid.covariates);

        std::vector<Eigen::Index> in_v, in_vc;
        for (Eigen::Index i = 0; i < valid.n(); ++i)
            (fr.valid_in_v[static_cast<std::size_t>(i)] ? in_v : in_vc).push_back(i);
        if (in_v.size() < 2 || in_vc.size() < 2) {
            fr.flagged = true;
            fr.flag_reason = "validation region below 2 rows on one side";
            return fr;
        }
        const Eigen::Index k = static_cast<Eigen::Index>(fr.selected_exposure_index);
        fr.effect_v = region_estimate(gather(ve.iie.col(k), in_v), gather(vu.col(k), in_v));
        fr.effect_vc = region_estimate(gather(ve.iie.col(k), in_vc), gather(vu.col(k), in_vc));
    }
    return fr;
}

PooledReport pool(const std::vector<FoldResult>& folds) {
    PooledReport report;
    std::vector<const FoldResult*> usable;
    for (const auto& f : folds) {
        if (f.flagged) {
            ++report.folds_flagged;
            continue;
        }
        usable.push_back(&f);
    }
    if (usable.empty()) throw EstimationError("all folds flagged; nothing to pool");
    report.folds_used = static_cast<int>(usable.size());

    const Eigen::Index p = usable.front()->valid_iie.cols();

    // Marginal variable importance from the stacked validation rows.
    for (Eigen::Index k = 0; k < p; ++k) {
        std::vector<double> iie, u;
        for (const auto* f : usable)
            for (Eigen::Index i = 0; i < f->valid_iie.rows(); ++i) {
                iie.push_back(f->valid_iie(i, k));
                u.push_back(f->valid_u(i, k));
            }
        const Eigen::Map<const Eigen::VectorXd> iie_v(iie.data(), static_cast<Eigen::Index>(iie.size()));
        const Eigen::Map<const Eigen::VectorXd> u_v(u.data(), static_cast<Eigen::Index>(u.size()));
        MarginalEstimate m;
        m.exposure = usable.front()->marginal[static_cast<std::size_t>(k)].exposure;
        m.psi = iie_v.mean();
        m.se = std::sqrt(sample_variance(u_v) / static_cast<double>(u_v.size()));
        std::tie(m.ci_lo, m.ci_hi) = wald_ci(m.psi, m.se);
        report.variable_importance.push_back(std::move(m));
    }

    // Region pooling over rule-bearing folds, rows classified fold-locally.
    std::vector<double> iie_v, u_v, iie_vc, u_vc;
    std::map<std::pair<std::string, std::string>, int> rule_votes;
    for (const auto* f : usable) {
        if (!f->rule) {
            ++report.folds_no_modifier;
            continue;
        }
        const Eigen::Index k = static_cast<Eigen::Index>(f->selected_exposure_index);
        for (Eigen::Index i = 0; i < f->valid_iie.rows(); ++i) {
            if (f->valid_in_v[static_cast<std::size_t>(i)]) {
                iie_v.push_back(f->valid_iie(i, k));
                u_v.push_back(f->valid_u(i, k));
            } else {
                iie_vc.push_back(f->valid_iie(i, k));
                u_vc.push_back(f->valid_u(i, k));
            }
        }
        ++rule_votes[{*f->exposure, f->rule->conditions.front().covariate}];
    }

    if (!rule_votes.empty() && !iie_v.empty() && !iie_vc.empty()) {
        auto modal = rule_votes.begin();
        for (auto it = rule_votes.begin(); it != rule_votes.end(); ++it)
            if (it->second > modal->second) modal = it;  // map order breaks ties lexicographically
        report.modal_exposure = modal->first.first;

        std::vector<double> thresholds;
        for (const auto* f : usable) {
            if (!f->rule) continue;
            if (*f->exposure == modal->first.first &&
                f->rule->conditions.front().covariate == modal->first.second)
                thresholds.push_back(f->rule->conditions.front().threshold);
        }
        std::sort(thresholds.begin(), thresholds.end());
        const std::size_t mid = thresholds.size() / 2;
        const double median_thr = thresholds.size() % 2 == 1
                                      ? thresholds[mid]
                                      : 0.5 * (thresholds[mid - 1] + thresholds[mid]);
        PartitionRule modal_rule;
        int cov_index = -1;
        for (const auto* f : usable)
            if (f->rule && f->rule->conditions.front().covariate == modal->first.second) {
                cov_index = f->rule->conditions.front().covariate_index;
                break;
            }
        modal_rule.conditions.push_back({modal->first.second, cov_index, Comparator::le, median_thr});
        report.modal_rule = std::move(modal_rule);
        report.agreement = static_cast<double>(modal->second) / static_cast<double>(report.folds_used);

        auto to_vec = [](const std::vector<double>& v) {
            return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        };
        report.region_v = region_estimate(to_vec(iie_v), to_vec(u_v));
        report.region_vc = region_estimate(to_vec(iie_vc), to_vec(u_vc));
        report.difference = difference_test(report.region_v->psi, report.region_v->variance,
                                            report.region_vc->psi, report.region_vc->variance);
    }
    return report;
}

AnalysisResult run_cv_pipeline(const Dataset& data, const ShiftSpec& spec,
                               const AnalysisConfig& config) {
    data.validate();
    AnalysisResult result;
    result.n = data.n();
    result.config = config;
    result.resolved_shift = resolve_shift(data, spec);

    const auto folds = make_folds(data.n(), config.folds, config.seed);
    std::vector<FoldResult> fold_results(folds.size());

    parallel_for(folds.size(), config.threads, [&](std::size_t f) {
        std::vector<Eigen::Index> train_rows;
        train_rows.reserve(static_cast<std::size_t>(data.n()) - folds[f].size());
        for (std::size_t g = 0; g < folds.size(); ++g) {
            if (g == f) continue;
            train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(train_rows.begin(), train_rows.end());
        const Dataset train = data.subset(train_rows);
        const Dataset valid = data.subset(folds[f]);
        AnalysisConfig fold_config = config;
        fold_config.threads = 1;  // folds are the parallel unit
        fold_results[f] = run_fold(train, valid, result.resolved_shift, fold_config,
                                   static_cast<int>(f), folds[f]);
    });

    result.folds = std::move(fold_results);
    result.pooled = pool(result.folds);
    return result;
}

}  // namespace shiftem
