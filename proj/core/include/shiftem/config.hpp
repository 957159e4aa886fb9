#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shiftem/errors.hpp"

namespace shiftem {

enum class LearnerId {
    intercept_only,
    linear_ols,
    logistic_glm,
    regression_tree,
    gradient_boosted_stumps,
    k_nearest,
};

std::string learner_name(LearnerId id);

struct LearnerSpec {
    LearnerId id = LearnerId::linear_ols;
    std::map<std::string, double> hyper;

    double get(const std::string& key, double fallback) const {
        auto it = hyper.find(key);
        return it == hyper.end() ? fallback : it->second;
    }

    /// Parse "name" or "name(key=val, key=val)". Throws ConfigError on unknown names.
    static LearnerSpec parse(const std::string& text);
    std::string to_string() const;
};

enum class OutcomeScale { linear, bounded_logit };

struct AnalysisConfig {
    int folds = 10;
    int inner_folds = 5;
    int max_depth = 2;
    int min_obs = 0;  // 0 resolves to max(25, n/20) at run time
    double significance_z = 1.96;
    double ratio_lo = 0.01;
    double ratio_hi = 100.0;
    OutcomeScale scale = OutcomeScale::linear;
    std::vector<LearnerSpec> outcome_roster;
    std::vector<LearnerSpec> ratio_roster;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 -> hardware concurrency

    static std::vector<LearnerSpec> default_outcome_roster();
    static std::vector<LearnerSpec> default_ratio_roster();

    /// Fill empty rosters with defaults and check invariants; throws ConfigError.
    void finalize();

    int resolved_min_obs(long n) const;
};

struct RoleMap {
    std::vector<std::string> covariates;
    std::vector<std::string> exposures;
    std::string outcome;
};

enum class ShiftUnits { raw, sd_multiple };

struct ShiftSpec {
    std::map<std::string, double> per_exposure_delta;
    ShiftUnits units = ShiftUnits::raw;
};

/// Flat INI-style sections: [columns], [shift], [search], [learners], [run].
struct RunConfig {
    RoleMap roles;
    ShiftSpec shift;
    AnalysisConfig analysis;
    std::string csv_path;  // optional "data" key in [run]
};

RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin = "<config>");

}  // namespace shiftem
