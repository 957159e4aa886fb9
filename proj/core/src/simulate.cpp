#include "shiftem/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "shiftem/errors.hpp"
#include "shiftem/parallel.hpp"
#include "shiftem/rng.hpp"
#include "shiftem/stats.hpp"

namespace shiftem {

std::string dgp_name(Dgp dgp) { return dgp == Dgp::binary ? "binary" : "continuous"; }

Dgp parse_dgp(const std::string& name) {
    if (name == "binary") return Dgp::binary;
    if (name == "continuous") return Dgp::continuous;
    throw ConfigError("unknown dgp '" + name + "' (expected binary or continuous)");
}

namespace {

constexpr double kShiftDelta = 0.5;

struct Draws {
    Eigen::MatrixXd w;  // n x 3
    Eigen::MatrixXd a;  // n x 3
    Eigen::VectorXd noise;
};

Draws draw_structurals(Eigen::Index n, std::uint64_t seed, bool continuous_w3) {
    auto rng = make_rng(derive_seed(seed, 0xD67Au));
    std::bernoulli_distribution bern(0.5);
    std::normal_distribution<double> unit(0.0, 1.0);
    Draws d;
    d.w.resize(n, 3);
    d.a.resize(n, 3);
    d.noise.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.w(i, 0) = bern(rng) ? 1.0 : 0.0;
        d.w(i, 1) = bern(rng) ? 1.0 : 0.0;
        d.w(i, 2) = continuous_w3 ? 40.0 + 10.0 * unit(rng) : (bern(rng) ? 1.0 : 0.0);
        d.a(i, 0) = 0.5 * d.w(i, 2) + 0.3 * d.w(i, 1) + 0.4 * d.w(i, 0) + unit(rng);
        d.a(i, 1) = 0.3 * d.w(i, 1) + 0.3 * d.w(i, 0) + unit(rng);
        d.a(i, 2) = 0.2 * d.w(i, 0) + unit(rng);
        d.noise(i) = unit(rng);
    }
    return d;
}

double outcome_eq(double a1, double a2, double a3, double w1, double w2, double w3_effect,
                  double noise) {
    return 2.0 + 1.0 * a1 + 0.5 * a2 + 0.2 * a3 + 0.5 * w3_effect - 0.3 * w2 + 0.4 * w1 +
           2.0 * a1 * w3_effect + noise;
}

std::pair<Dataset, SimTruth> build_dgp(Eigen::Index n, std::uint64_t seed, bool continuous_w3) {
    if (n < 1) throw DataError("dgp needs n >= 1");
    const Draws d = draw_structurals(n, seed, continuous_w3);
    const double threshold = continuous_w3 ? 55.0 : 0.5;

    Dataset data;
    data.covariates = d.w;
    data.exposures = d.a;
    data.outcome.resize(n);
    data.covariate_names = {"W1", "W2", "W3"};
    data.exposure_names = {"A1", "A2", "A3"};
    data.outcome_name = "Y";

    SimTruth truth;
    truth.modifier = "W3";
    truth.true_threshold = threshold;
    truth.psi_v_true = -kShiftDelta * 1.0;         // d/dA1 = 1 below the threshold
    truth.psi_vc_true = -kShiftDelta * 3.0;        // 1 + 2 above it
    truth.delta = kShiftDelta;
    truth.shifted_exposure = "A1";
    truth.true_membership.resize(static_cast<std::size_t>(n));

    for (Eigen::Index i = 0; i < n; ++i) {
        const bool high = d.w(i, 2) > threshold;
        const double w3_effect = high ? 1.0 : 0.0;
        data.outcome(i) = outcome_eq(d.a(i, 0), d.a(i, 1), d.a(i, 2), d.w(i, 0), d.w(i, 1),
                                     w3_effect, d.noise(i));
        truth.true_membership[static_cast<std::size_t>(i)] = high;
    }
    return {std::move(data), std::move(truth)};
}

}  // namespace

std::pair<Dataset, SimTruth> gen_binary_dgp(Eigen::Index n, std::uint64_t seed) {
    return build_dgp(n, seed, false);
}

std::pair<Dataset, SimTruth> gen_continuous_dgp(Eigen::Index n, std::uint64_t seed) {
    return build_dgp(n, seed, true);
}

std::pair<Dataset, SimTruth> generate_dgp(Dgp dgp, Eigen::Index n, std::uint64_t seed) {
    return dgp == Dgp::binary ? gen_binary_dgp(n, seed) : gen_continuous_dgp(n, seed);
}

std::pair<double, double> simulated_truth(Dgp dgp, Eigen::Index n, std::uint64_t seed) {
    // Paper-style ground truth: redraw a large population, apply the structural
    // shift to the first exposure with the same noise, and average Y_delta - Y
    // per region. The noise cancels, so this reproduces the analytic values.
    const bool continuous = dgp == Dgp::continuous;
    const Draws d = draw_structurals(n, seed, continuous);
    const double threshold = continuous ? 55.0 : 0.5;
    double sum_v = 0.0, sum_vc = 0.0;
    long n_v = 0, n_vc = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w3_effect = d.w(i, 2) > threshold ? 1.0 : 0.0;
        const double y = outcome_eq(d.a(i, 0), d.a(i, 1), d.a(i, 2), d.w(i, 0), d.w(i, 1),
                                    w3_effect, d.noise(i));
        const double y_shift = outcome_eq(d.a(i, 0) - kShiftDelta, d.a(i, 1), d.a(i, 2), d.w(i, 0),
                                          d.w(i, 1), w3_effect, d.noise(i));
        if (w3_effect > 0.5) {
            sum_vc += y_shift - y;
            ++n_vc;
        } else {
            sum_v += y_shift - y;
            ++n_v;
        }
    }
    return {n_v > 0 ? sum_v / n_v : 0.0, n_vc > 0 ? sum_vc / n_vc : 0.0};
}

DetectionStats detection_metrics(const std::vector<char>& predicted,
                                 const std::vector<char>& truth) {
    if (predicted.size() != truth.size())
        throw DataError("detection membership vectors differ in length");
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i] && truth[i]) ++tp;
        else if (predicted[i]) ++fp;
        else if (truth[i]) ++fn;
        else ++tn;
    }
    DetectionStats s;
    const auto total = static_cast<double>(truth.size());
    s.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
    if (tp + fp == 0) {
        s.precision = 0.0;
        s.precision_undefined = true;
    } else {
        s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    s.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

std::vector<RepOutcome> run_reps(Eigen::Index n, int reps, Dgp dgp, const AnalysisConfig& config,
                                 std::uint64_t seed) {
    if (reps < 1) throw ConfigError("reps must be >= 1");
    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));

    parallel_for(static_cast<std::size_t>(reps), config.threads, [&](std::size_t r) {
        RepOutcome& out = outcomes[r];
        const std::uint64_t rep_seed =
            derive_seed(seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
        try {
            auto [data, truth] = generate_dgp(dgp, n, rep_seed);
            out.truth_v = truth.psi_v_true;
            out.truth_vc = truth.psi_vc_true;

            ShiftSpec spec;
            spec.units = ShiftUnits::raw;
            for (const auto& name : data.exposure_names) spec.per_exposure_delta[name] = truth.delta;

            AnalysisConfig rep_config = config;
            rep_config.seed = rep_seed;
            rep_config.threads = 1;  // replications are the parallel unit
            const AnalysisResult result = run_cv_pipeline(data, spec, rep_config);

            std::vector<char> predicted(static_cast<std::size_t>(n), 0);
            if (result.pooled.modal_rule) {
                out.root_covariate = result.pooled.modal_rule->conditions.front().covariate;
                out.root_threshold = result.pooled.modal_rule->conditions.front().threshold;
                const auto member = result.pooled.modal_rule->membership(data.covariates);
                for (std::size_t i = 0; i < member.size(); ++i) predicted[i] = !member[i];
            }
            out.detection = detection_metrics(predicted, truth.true_membership);
            for (std::size_t i = 0; i < predicted.size(); ++i) {
                if (predicted[i] && truth.true_membership[i]) ++out.tp;
                else if (predicted[i]) ++out.fp;
                else if (truth.true_membership[i]) ++out.fn;
                else ++out.tn;
            }
            out.est_v = result.pooled.region_v;
            out.est_vc = result.pooled.region_vc;
            out.ok = true;
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
    });
    return outcomes;
}

namespace {

DetectionStats stats_from_confusion(long tp, long fp, long fn, long tn) {
    DetectionStats s;
    const double total = static_cast<double>(tp + fp + fn + tn);
    s.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
    if (tp + fp == 0) {
        s.precision = 0.0;
        s.precision_undefined = true;
    } else {
        s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    s.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

}  // namespace

std::vector<MetricsRow> summarize_reps(Dgp dgp, Eigen::Index n,
                                       const std::vector<RepOutcome>& outcomes) {
    int failed = 0;
    DetectionStats det_avg;
    long tp = 0, fp = 0, fn = 0, tn = 0;
    int ok_count = 0;
    for (const auto& o : outcomes) {
        if (!o.ok) {
            ++failed;
            continue;
        }
        ++ok_count;
        det_avg.accuracy += o.detection.accuracy;
        det_avg.precision += o.detection.precision;
        det_avg.recall += o.detection.recall;
        det_avg.f1 += o.detection.f1;
        det_avg.precision_undefined |= o.detection.precision_undefined;
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
    }
    if (ok_count > 0) {
        det_avg.accuracy /= ok_count;
        det_avg.precision /= ok_count;
        det_avg.recall /= ok_count;
        det_avg.f1 /= ok_count;
    }
    const DetectionStats det_pooled = stats_from_confusion(tp, fp, fn, tn);

    std::vector<MetricsRow> rows;
    for (const std::string region : {"v", "vc"}) {
        std::vector<double> est;
        double truth = 0.0;
        int covered = 0;
        for (const auto& o : outcomes) {
            if (!o.ok) continue;
            const auto& e = region == "v" ? o.est_v : o.est_vc;
            truth = region == "v" ? o.truth_v : o.truth_vc;
            if (!e) continue;
            est.push_back(e->psi);
            if (e->ci_lo <= truth && truth <= e->ci_hi) ++covered;
        }
        MetricsRow row;
        row.dgp = dgp;
        row.n = n;
        row.region = region;
        row.reps = static_cast<int>(outcomes.size());
        row.failed_reps = failed;
        row.detection = det_avg;
        row.detection_pooled = det_pooled;
        if (!est.empty()) {
            const Eigen::Map<const Eigen::VectorXd> e(est.data(), static_cast<Eigen::Index>(est.size()));
            row.bias = e.mean() - truth;
            row.variance = population_variance(e);
            row.mse = row.bias * row.bias + row.variance;
            row.coverage = static_cast<double>(covered) / static_cast<double>(est.size());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<MetricsRow> run_sim_grid(const std::vector<Eigen::Index>& ns, int reps, Dgp dgp,
                                     const AnalysisConfig& config, std::uint64_t seed) {
    std::vector<MetricsRow> rows;
    for (const Eigen::Index n : ns) {
        const auto outcomes = run_reps(n, reps, dgp, config, seed);
        auto batch = summarize_reps(dgp, n, outcomes);
        rows.insert(rows.end(), std::make_move_iterator(batch.begin()),
                    std::make_move_iterator(batch.end()));
    }
    return rows;
}

AnalysisConfig default_sim_config() {
    AnalysisConfig config;
    config.folds = 5;
    config.inner_folds = 5;
    config.max_depth = 1;  // single-threshold truth in both generators
    config.min_obs = 0;
    config.significance_z = 1.96;
    config.scale = OutcomeScale::linear;
    config.outcome_roster = {
        LearnerSpec::parse("intercept_only"),
        LearnerSpec::parse("linear_ols"),
        LearnerSpec::parse("gradient_boosted_stumps(rounds=150, depth=2, shrinkage=0.1)"),
    };
    config.ratio_roster = {
        LearnerSpec::parse("intercept_only"),
        LearnerSpec::parse("logistic_glm"),
    };
    config.finalize();
    return config;
}

}  // namespace shiftem
