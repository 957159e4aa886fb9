#include "shiftem/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "shiftem/stats.hpp"

namespace shiftem {

bool PartitionRule::contains(const Eigen::MatrixXd& covariates, Eigen::Index row) const {
    for (const auto& c : conditions) {
        const double v = covariates(row, c.covariate_index);
        if (c.cmp == Comparator::le ? !(v <= c.threshold) : !(v > c.threshold)) return false;
    }
    return true;
}

std::vector<char> PartitionRule::membership(const Eigen::MatrixXd& covariates) const {
    std::vector<char> out(static_cast<std::size_t>(covariates.rows()));
    for (Eigen::Index i = 0; i < covariates.rows(); ++i)
        out[static_cast<std::size_t>(i)] = contains(covariates, i);
    return out;
}

std::string PartitionRule::to_string() const {
    if (conditions.empty()) return "(all)";
    std::string out;
    char buf[64];
    for (std::size_t i = 0; i < conditions.size(); ++i) {
        if (i) out += " & ";
        const auto& c = conditions[i];
        std::snprintf(buf, sizeof(buf), "%.6g", c.threshold);
        out += c.covariate + (c.cmp == Comparator::le ? " <= " : " > ") + buf;
    }
    return out;
}

namespace {

struct RegionAccum {
    double iie_sum = 0.0;
    double ice_sum = 0.0, ice_sq = 0.0;
    Eigen::Index count = 0;

    void add(double iie, double ice) {
        iie_sum += iie;
        ice_sum += ice;
        ice_sq += ice * ice;
        ++count;
    }
    double psi() const { return iie_sum / static_cast<double>(count); }
    // Within-region sample variance of the influence values (self-centering, so
    // globally or locally centered ICE inputs agree).
    double var_of_mean() const {
        if (count < 2) return 0.0;
        const double m = ice_sum / static_cast<double>(count);
        const double s2 = (ice_sq - static_cast<double>(count) * m * m) / static_cast<double>(count - 1);
        return std::max(s2, 0.0) / static_cast<double>(count);
    }
};

SplitStat finish_stat(const RegionAccum& v, const RegionAccum& vc, PartitionRule rule) {
    SplitStat s;
    s.rule = std::move(rule);
    s.n_v = v.count;
    s.n_vc = vc.count;
    s.psi_v = v.psi();
    s.psi_vc = vc.psi();
    s.psi_diff = s.psi_v - s.psi_vc;
    s.var_diff = v.var_of_mean() + vc.var_of_mean();
    if (s.var_diff > 0) {
        s.t_stat = s.psi_diff / std::sqrt(s.var_diff);
    } else {
        s.t_stat = s.psi_diff == 0.0 ? 0.0
                                     : std::copysign(std::numeric_limits<double>::infinity(), s.psi_diff);
    }
    return s;
}

}  // namespace

std::optional<SplitStat> evaluate_split(const Eigen::VectorXd& iie, const Eigen::VectorXd& ice,
                                        const Eigen::VectorXd& covariate, double threshold,
                                        int min_obs, const std::string& covariate_name,
                                        int covariate_index) {
    RegionAccum v, vc;
    for (Eigen::Index i = 0; i < covariate.size(); ++i)
        (covariate(i) <= threshold ? v : vc).add(iie(i), ice(i));
    if (v.count < min_obs || vc.count < min_obs) return std::nullopt;
    PartitionRule rule;
    rule.conditions.push_back({covariate_name, covariate_index, Comparator::le, threshold});
    return finish_stat(v, vc, std::move(rule));
}

std::vector<double> candidate_thresholds(const Eigen::VectorXd& covariate, int cap) {
    std::vector<double> values(covariate.data(), covariate.data() + covariate.size());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.size() < 2) return {};
    std::vector<double> mids;
    mids.reserve(values.size() - 1);
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        mids.push_back(values[i] + 0.5 * (values[i + 1] - values[i]));
    if (static_cast<int>(mids.size()) <= cap) return mids;
    // Equally spaced ranks keep the induced memberships order-statistic based.
    std::vector<double> picked;
    picked.reserve(static_cast<std::size_t>(cap));
    const double step = static_cast<double>(mids.size()) / static_cast<double>(cap + 1);
    std::size_t last = mids.size();
    for (int i = 1; i <= cap; ++i) {
        const auto idx = static_cast<std::size_t>(step * i);
        if (idx != last && idx < mids.size()) picked.push_back(mids[idx]);
        last = idx;
    }
    return picked;
}

std::optional<SplitStat> best_split(const Eigen::VectorXd& iie, const Eigen::VectorXd& ice,
                                    const Eigen::MatrixXd& covariates,
                                    const std::vector<std::string>& covariate_names, int min_obs,
                                    double significance_z, int threshold_cap) {
    std::optional<SplitStat> best;
    for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
        const Eigen::VectorXd col = covariates.col(j);
        for (const double thr : candidate_thresholds(col, threshold_cap)) {
            auto cand = evaluate_split(iie, ice, col, thr, min_obs,
                                       covariate_names[static_cast<std::size_t>(j)],
                                       static_cast<int>(j));
            if (!cand) continue;
            // Strict improvement only: scan order (low index, low threshold) breaks ties.
            if (!best || std::abs(cand->t_stat) > std::abs(best->t_stat)) best = std::move(cand);
        }
    }
    if (!best || std::abs(best->t_stat) < significance_z) return std::nullopt;
    return best;
}

namespace {

struct SubsetView {
    Eigen::VectorXd iie, ice;
    Eigen::MatrixXd covariates;
};

SubsetView take(const Eigen::VectorXd& iie, const Eigen::VectorXd& ice,
                const Eigen::MatrixXd& covariates, const std::vector<Eigen::Index>& rows) {
    SubsetView s;
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    s.iie.resize(m);
    s.ice.resize(m);
    s.covariates.resize(m, covariates.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index r = rows[static_cast<std::size_t>(i)];
        s.iie(i) = iie(r);
        s.ice(i) = ice(r);
        s.covariates.row(i) = covariates.row(r);
    }
    return s;
}

std::unique_ptr<PartitionNode> grow_partition(const Eigen::VectorXd& iie, const Eigen::VectorXd& ice,
                                              const Eigen::MatrixXd& covariates,
                                              const std::vector<std::string>& names,
                                              const std::vector<Eigen::Index>& rows,
                                              const PartitionRule& path, int depth,
                                              const AnalysisConfig& config, int min_obs) {
    if (depth >= config.max_depth) return nullptr;
    const SubsetView sub = take(iie, ice, covariates, rows);
    auto found = best_split(sub.iie, sub.ice, sub.covariates, names, min_obs,
                            config.significance_z);
    if (!found) return nullptr;

    auto node = std::make_unique<PartitionNode>();
    node->stat = *found;
    const Condition own = found->rule.conditions.back();
    node->stat.rule = path;
    node->stat.rule.conditions.push_back(own);

    std::vector<Eigen::Index> low_rows, high_rows;
    for (const Eigen::Index r : rows)
        (covariates(r, own.covariate_index) <= own.threshold ? low_rows : high_rows).push_back(r);

    PartitionRule low_path = path;
    low_path.conditions.push_back(own);
    PartitionRule high_path = path;
    Condition flipped = own;
    flipped.cmp = Comparator::gt;
    high_path.conditions.push_back(flipped);

    node->low = grow_partition(iie, ice, covariates, names, low_rows, low_path, depth + 1, config, min_obs);
    node->high = grow_partition(iie, ice, covariates, names, high_rows, high_path, depth + 1, config, min_obs);
    return node;
}

}  // namespace

std::optional<SplitStat> stat_for_rule(const PartitionRule& rule, const Eigen::VectorXd& iie,
                                       const Eigen::VectorXd& ice,
                                       const Eigen::MatrixXd& covariates) {
    RegionAccum v, vc;
    for (Eigen::Index i = 0; i < covariates.rows(); ++i)
        (rule.contains(covariates, i) ? v : vc).add(iie(i), ice(i));
    if (v.count == 0 || vc.count == 0) return std::nullopt;
    return finish_stat(v, vc, rule);
}

std::optional<SplitStat> PartitionTree::candidate() const { return candidate_; }

std::vector<PartitionRule> PartitionTree::leaves() const {
    std::vector<PartitionRule> out;
    if (!root) {
        out.push_back(PartitionRule{});
        return out;
    }
    struct Walker {
        std::vector<PartitionRule>& out;
        void walk(const PartitionNode& node, const PartitionRule& path) {
            const Condition own = node.stat.rule.conditions.back();
            PartitionRule low = path;
            low.conditions.push_back(own);
            Condition flipped = own;
            flipped.cmp = Comparator::gt;
            PartitionRule high = path;
            high.conditions.push_back(flipped);
            if (node.low) walk(*node.low, low);
            else out.push_back(low);
            if (node.high) walk(*node.high, high);
            else out.push_back(high);
        }
    } walker{out};
    walker.walk(*root, PartitionRule{});
    return out;
}

PartitionTree t_part(const Eigen::VectorXd& iie, const Eigen::VectorXd& ice,
                     const Eigen::MatrixXd& covariates,
                     const std::vector<std::string>& covariate_names,
                     const AnalysisConfig& config, int min_obs) {
    PartitionTree tree;
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(covariates.rows()));
    for (Eigen::Index i = 0; i < covariates.rows(); ++i) rows[static_cast<std::size_t>(i)] = i;
    tree.root = grow_partition(iie, ice, covariates, covariate_names, rows, PartitionRule{}, 0,
                               config, min_obs);
    if (!tree.root) return tree;

    // Deepest significant path: descend into the child carrying the larger |t|
    // until neither child split exists; V is the final split's <= side and the
    // complement is everything outside that conjunction.
    const PartitionNode* node = tree.root.get();
    while (true) {
        const PartitionNode* next = nullptr;
        if (node->low && node->high)
            next = std::abs(node->low->stat.t_stat) >= std::abs(node->high->stat.t_stat)
                       ? node->low.get()
                       : node->high.get();
        else if (node->low)
            next = node->low.get();
        else if (node->high)
            next = node->high.get();
        if (!next) break;
        node = next;
    }
    PartitionRule rule = node->stat.rule;  // path plus this split's own <= condition
    auto stat = stat_for_rule(rule, iie, ice, covariates);
    if (stat) tree.candidate_ = *stat;
    return tree;
}

std::optional<SplitStat> select_max_modifier(const EffectMatrices& effects,
                                             const Eigen::MatrixXd& covariates,
                                             const std::vector<std::string>& covariate_names,
                                             const AnalysisConfig& config, int min_obs) {
    std::optional<SplitStat> best;
    for (Eigen::Index k = 0; k < effects.iie.cols(); ++k) {
        const PartitionTree tree = t_part(effects.iie.col(k), effects.ice.col(k), covariates,
                                          covariate_names, config, min_obs);
        auto cand = tree.candidate();
        if (!cand) continue;
        cand->exposure = effects.exposure_names[static_cast<std::size_t>(k)];
        if (!best || std::abs(cand->t_stat) > std::abs(best->t_stat)) best = std::move(cand);
    }
    return best;
}

}  // namespace shiftem
