#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "shiftem/dataset.hpp"
#include "shiftem/errors.hpp"

using namespace shiftem;

namespace {

const char* kCsv =
    "W1,W2,W3,A1,A2,A3,Y\n"
    "0,1,0,0.5,-0.2,0.1,2.3\n"
    "1,0,1,1.2,0.4,-0.3,4.1\n"
    "0,0,1,-0.1,0.9,0.2,3.3\n"
    "1,1,0,0.8,-0.5,0.6,2.9\n";

RoleMap roles_wavy() {
    RoleMap r;
    r.covariates = {"W1", "W2", "W3"};
    r.exposures = {"A1", "A2", "A3"};
    r.outcome = "Y";
    return r;
}

}  // namespace

TEST_CASE("load_dataset parses a 4-row CSV with mapped roles") {
    const LoadResult res = load_dataset_text(kCsv, roles_wavy());
    CHECK(res.data.n() == 4);
    CHECK(res.data.p() == 3);
    CHECK(res.data.q() == 3);
    CHECK(res.dropped_rows == 0);
    CHECK(res.data.exposures(1, 0) == doctest::Approx(1.2));
    CHECK(res.data.outcome(3) == doctest::Approx(2.9));
}

TEST_CASE("rows with missing mapped values are dropped and counted") {
    const std::string csv =
        "W1,W2,W3,A1,A2,A3,Y\n"
        "0,1,0,0.5,-0.2,0.1,2.3\n"
        "1,0,1,1.2,0.4,-0.3,NaN\n"
        "0,0,1,-0.1,0.9,0.2,3.3\n";
    const LoadResult res = load_dataset_text(csv, roles_wavy());
    CHECK(res.data.n() == 2);
    CHECK(res.dropped_rows == 1);
}

TEST_CASE("unmapped role raises a config error naming the column") {
    RoleMap roles = roles_wavy();
    roles.covariates.push_back("Z9");
    CHECK_THROWS_WITH_AS(load_dataset_text(kCsv, roles),
                         doctest::Contains("unmapped role"), ConfigError);
}

TEST_CASE("non-numeric cell in a mapped column is a data error") {
    const std::string csv =
        "W1,A1,Y\n"
        "0,abc,2.3\n";
    RoleMap roles;
    roles.covariates = {"W1"};
    roles.exposures = {"A1"};
    roles.outcome = "Y";
    CHECK_THROWS_AS((void)load_dataset_text(csv, roles), DataError);
}

TEST_CASE("all rows missing leaves zero rows and errors") {
    const std::string csv = "W1,A1,Y\n,1,2\n";
    RoleMap roles;
    roles.covariates = {"W1"};
    roles.exposures = {"A1"};
    roles.outcome = "Y";
    CHECK_THROWS_WITH_AS((void)load_dataset_text(csv, roles), doctest::Contains("zero rows"),
                         DataError);
}

TEST_CASE("quoted fields with commas survive parsing") {
    const CsvTable t = parse_csv("a,b\n\"1,5\",2\n");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][0] == "1,5");
}

TEST_CASE("load -> serialize -> load round-trips bit-identically") {
    const LoadResult first = load_dataset_text(kCsv, roles_wavy());
    const std::string path = (std::filesystem::temp_directory_path() / "shiftem_rt.csv").string();
    write_dataset_csv(path, first.data);
    const LoadResult second = load_dataset(path, roles_wavy());
    CHECK(first.data.covariates == second.data.covariates);
    CHECK(first.data.exposures == second.data.exposures);
    CHECK(first.data.outcome == second.data.outcome);
    std::remove(path.c_str());
}

TEST_CASE("resolve_shift: sd_multiple scales by the sample SD") {
    // Exposure column with known sample SD (n-1 denominator).
    Dataset d;
    d.covariate_names = {};
    d.exposure_names = {"E"};
    d.outcome_name = "Y";
    d.covariates.resize(4, 0);
    d.exposures.resize(4, 1);
    d.exposures << 1.0, 2.0, 3.0, 4.0;  // sample SD = sqrt(5/3)
    d.outcome.setZero(4);

    ShiftSpec spec;
    spec.units = ShiftUnits::sd_multiple;
    spec.per_exposure_delta["E"] = -1.0;
    const ShiftSpec resolved = resolve_shift(d, spec);
    CHECK(resolved.per_exposure_delta.at("E") == doctest::Approx(-std::sqrt(5.0 / 3.0)));
    CHECK(resolved.units == ShiftUnits::raw);
}

TEST_CASE("resolve_shift matches a reported 1-SD reduction") {
    // A column engineered to have sample SD 52.7907 exactly.
    const double target_sd = 52.7907;
    Dataset d;
    d.exposure_names = {"E"};
    d.outcome_name = "Y";
    d.covariates.resize(2, 0);
    d.exposures.resize(2, 1);
    const double half_gap = target_sd / std::sqrt(2.0);  // two points: sd = gap/sqrt(2)
    d.exposures << 0.0, 2.0 * half_gap;
    d.outcome.setZero(2);

    ShiftSpec spec;
    spec.units = ShiftUnits::sd_multiple;
    spec.per_exposure_delta["E"] = -1.0;
    CHECK(resolve_shift(d, spec).per_exposure_delta.at("E") == doctest::Approx(-52.7907));
}

TEST_CASE("resolve_shift is the identity on raw specs (idempotent)") {
    Dataset d;
    d.exposure_names = {"E"};
    d.outcome_name = "Y";
    d.covariates.resize(3, 0);
    d.exposures.resize(3, 1);
    d.exposures << 1, 2, 3;
    d.outcome.setZero(3);

    ShiftSpec spec;
    spec.units = ShiftUnits::raw;
    spec.per_exposure_delta["E"] = -0.5;
    const ShiftSpec once = resolve_shift(d, spec);
    const ShiftSpec twice = resolve_shift(d, once);
    CHECK(once.per_exposure_delta.at("E") == -0.5);
    CHECK(twice.per_exposure_delta.at("E") == -0.5);
}

TEST_CASE("constant exposure column with sd_multiple units errors") {
    Dataset d;
    d.exposure_names = {"E"};
    d.outcome_name = "Y";
    d.covariates.resize(3, 0);
    d.exposures = Eigen::MatrixXd::Constant(3, 1, 2.0);
    d.outcome.setZero(3);

    ShiftSpec spec;
    spec.units = ShiftUnits::sd_multiple;
    spec.per_exposure_delta["E"] = 1.0;
    CHECK_THROWS_AS((void)resolve_shift(d, spec), DataError);
}

TEST_CASE("config file parses flat sections and learner rosters") {
    const std::string ini =
        "[columns]\n"
        "covariates = W1, W2\n"
        "exposures = A1\n"
        "outcome = Y\n"
        "[shift]\n"
        "units = raw\n"
        "A1 = -0.5\n"
        "[search]\n"
        "folds = 4\n"
        "max_depth = 1\n"
        "significance_z = 2.5\n"
        "[learners]\n"
        "outcome = linear_ols, gradient_boosted_stumps(rounds=50, depth=2)\n"
        "ratio = logistic_glm\n"
        "[run]\n"
        "seed = 42\n";
    const RunConfig rc = parse_run_config_text(ini);
    CHECK(rc.roles.covariates.size() == 2);
    CHECK(rc.shift.per_exposure_delta.at("A1") == -0.5);
    CHECK(rc.analysis.folds == 4);
    CHECK(rc.analysis.significance_z == 2.5);
    CHECK(rc.analysis.outcome_roster.size() == 2);
    CHECK(rc.analysis.outcome_roster[1].get("rounds", 0) == 50);
    CHECK(rc.analysis.ratio_roster.size() == 1);
    CHECK(rc.analysis.seed == 42);
}

TEST_CASE("config invariants are enforced") {
    CHECK_THROWS_AS((void)parse_run_config_text("[search]\nfolds = 1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_run_config_text("[search]\nmin_obs = 5\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_run_config_text("[search]\nratio_lo = 2\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_run_config_text("[learners]\noutcome = nonsense\n"), ConfigError);
}
