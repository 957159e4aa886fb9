#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "shiftem/config.hpp"

namespace shiftem {

/// Immutable after construction; safe to share read-only across workers.
struct Dataset {
    Eigen::MatrixXd covariates;  // n x q
    Eigen::MatrixXd exposures;   // n x p
    Eigen::VectorXd outcome;     // n
    std::vector<std::string> covariate_names;
    std::vector<std::string> exposure_names;
    std::string outcome_name;

    Eigen::Index n() const { return outcome.size(); }
    Eigen::Index p() const { return exposures.cols(); }
    Eigen::Index q() const { return covariates.cols(); }

    int exposure_index(const std::string& name) const;
    int covariate_index(const std::string& name) const;

    /// Learner design matrix: [exposures | covariates], exposure columns first.
    Eigen::MatrixXd design() const;

    Dataset subset(const std::vector<Eigen::Index>& rows) const;

    /// Throws DataError when an invariant fails (row mismatch, non-finite cell,
    /// duplicate names, n == 0).
    void validate() const;
};

struct LoadResult {
    Dataset data;
    std::size_t dropped_rows = 0;
};

/// Reads an RFC-4180 style CSV with a header row and maps columns by role.
/// Rows with any missing value in a mapped column are dropped and counted.
LoadResult load_dataset(const std::string& csv_path, const RoleMap& roles);

/// Same, but from in-memory text (tests, fixtures).
LoadResult load_dataset_text(const std::string& csv_text, const RoleMap& roles,
                             const std::string& origin = "<memory>");

void write_dataset_csv(const std::string& path, const Dataset& data);

/// Resolve sd_multiple deltas against the sample SD ((n-1) denominator) of each
/// exposure column. Raw specs pass through unchanged (idempotent).
ShiftSpec resolve_shift(const Dataset& data, const ShiftSpec& spec);

}  // namespace shiftem
