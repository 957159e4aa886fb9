#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shiftem/config.hpp"
#include "shiftem/tmle.hpp"

namespace shiftem {

enum class Comparator { le, gt };

struct Condition {
    std::string covariate;
    int covariate_index = -1;
    Comparator cmp = Comparator::le;
    double threshold = 0.0;
};

/// Conjunction of threshold conditions; a row is in V iff it satisfies all.
struct PartitionRule {
    std::vector<Condition> conditions;

    int depth() const { return static_cast<int>(conditions.size()); }
    bool contains(const Eigen::MatrixXd& covariates, Eigen::Index row) const;
    std::vector<char> membership(const Eigen::MatrixXd& covariates) const;
    std::string to_string() const;  // e.g. "age <= 14 & bmi > 27.3"
};

struct SplitStat {
    PartitionRule rule;  // full path defining V; complement is everything else
    std::string exposure;
    double psi_v = 0.0;
    double psi_vc = 0.0;
    double psi_diff = 0.0;  // psi_v - psi_vc, exactly
    double var_diff = 0.0;
    double t_stat = 0.0;
    Eigen::Index n_v = 0;
    Eigen::Index n_vc = 0;
};

/// Region means of iie with the variance of the region-mean difference taken
/// from the within-region sample variance of the influence values (the ICE is
/// re-centered inside each region, so globally or locally centered inputs give
/// the same variance). Empty result when either side is below min_obs.
std::optional<SplitStat> evaluate_split(const Eigen::VectorXd& iie, const Eigen::VectorXd& ice,
                                        const Eigen::VectorXd& covariate, double threshold,
                                        int min_obs, const std::string& covariate_name = "",
                                        int covariate_index = -1);

/// Candidate thresholds for one covariate: midpoints between consecutive unique
/// sorted values, capped via equally spaced quantiles.
std::vector<double> candidate_thresholds(const Eigen::VectorXd& covariate, int cap = 100);

/// Scan all covariates and thresholds, return the |t|-maximal split meeting the
/// significance gate; ties break toward the lower covariate index, then the
/// lower threshold. nullopt when nothing clears |t| >= significance_z.
std::optional<SplitStat> best_split(const Eigen::VectorXd& iie, const Eigen::VectorXd& ice,
                                    const Eigen::MatrixXd& covariates,
                                    const std::vector<std::string>& covariate_names,
                                    int min_obs, double significance_z,
                                    int threshold_cap = 100);

struct PartitionNode {
    SplitStat stat;  // rule holds the path from the root down to this split
    std::unique_ptr<PartitionNode> low;   // child region: condition satisfied (<=)
    std::unique_ptr<PartitionNode> high;  // child region: complement (>)
};

struct PartitionTree {
    std::unique_ptr<PartitionNode> root;

    bool has_split() const { return root != nullptr; }

    /// Deepest significant split path, descending at each level into the child
    /// whose own split carries the larger |t|; V is that split's <= side and
    /// the complement is everything else.
    std::optional<SplitStat> candidate() const;

    /// Disjoint, exhaustive leaf regions (depth-d tree -> at most 2^d leaves).
    std::vector<PartitionRule> leaves() const;

    std::optional<SplitStat> candidate_;
};

PartitionTree t_part(const Eigen::VectorXd& iie, const Eigen::VectorXd& ice,
                     const Eigen::MatrixXd& covariates,
                     const std::vector<std::string>& covariate_names,
                     const AnalysisConfig& config, int min_obs);

/// Recompute psi/variance/t for an arbitrary rule (V vs global complement) on
/// the given effect vectors. Used when reporting a candidate found elsewhere
/// and for the validation half of a CV fold. No min_obs gate; n_v, n_vc >= 1.
std::optional<SplitStat> stat_for_rule(const PartitionRule& rule, const Eigen::VectorXd& iie,
                                       const Eigen::VectorXd& ice,
                                       const Eigen::MatrixXd& covariates);

/// Run t_part per exposure column; global argmax |t| across exposures, or
/// nullopt when no exposure yields a significant split (a "no modifier"
/// result, not an error).
std::optional<SplitStat> select_max_modifier(const EffectMatrices& effects,
                                             const Eigen::MatrixXd& covariates,
                                             const std::vector<std::string>& covariate_names,
                                             const AnalysisConfig& config, int min_obs);

}  // namespace shiftem
