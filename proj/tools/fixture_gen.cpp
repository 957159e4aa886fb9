// Regenerates the bundled example data: a mixture panel shaped like a
// pollutant biomonitoring extract with a planted age-threshold interaction on
// one exposure. Run from the repo root: build/tools/shiftem_fixture_gen [dir]

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "shiftem/dataset.hpp"
#include "shiftem/rng.hpp"
#include "shiftem/stats.hpp"

using namespace shiftem;

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "data/fixture";
    std::filesystem::create_directories(dir);

    const Eigen::Index n = 1100;
    auto rng = make_rng(20240917u);
    std::uniform_int_distribution<int> age_dist(1, 85);
    std::bernoulli_distribution coin(0.5);
    std::bernoulli_distribution educ(0.6);
    std::normal_distribution<double> unit(0.0, 1.0);

    Dataset d;
    d.covariate_names = {"age", "sex", "bmi", "cotinine", "educ_hs", "wbc"};
    d.exposure_names = {"pcb_1", "pcb_2", "pcb_3", "dioxin_1", "dioxin_2", "furan_1"};
    d.outcome_name = "telomere";
    d.covariates.resize(n, 6);
    d.exposures.resize(n, 6);
    d.outcome.resize(n);

    for (Eigen::Index i = 0; i < n; ++i) {
        const double age = age_dist(rng);
        const double sex = coin(rng) ? 1.0 : 0.0;
        const double bmi = 27.0 + 5.0 * unit(rng);
        const double cotinine = std::exp(1.5 + 1.0 * unit(rng));
        const double educ_hs = educ(rng) ? 1.0 : 0.0;
        const double wbc = 7.0 + 1.8 * unit(rng);
        d.covariates.row(i) << age, sex, bmi, cotinine, educ_hs, wbc;

        // Log-normal exposure panel with mild age/bmi loading and varied scales.
        d.exposures(i, 0) = std::exp(3.0 + 0.008 * age + 0.45 * unit(rng));
        d.exposures(i, 1) = std::exp(1.2 + 0.004 * age + 0.02 * bmi / 10 + 0.5 * unit(rng));
        d.exposures(i, 2) = std::exp(2.0 + 0.010 * age + 0.40 * unit(rng));
        d.exposures(i, 3) = std::exp(0.5 + 0.003 * age + 0.6 * unit(rng));
        d.exposures(i, 4) = std::exp(1.0 + 0.005 * age + 0.5 * unit(rng));
        d.exposures(i, 5) = std::exp(0.8 + 0.002 * age + 0.55 * unit(rng));
    }

    // Standardized third exposure drives the outcome, twice as strongly below
    // the planted age threshold of 14.
    const double s3 = sample_sd(d.exposures.col(2));
    const double m3 = d.exposures.col(2).mean();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double age = d.covariates(i, 0);
        const double young = age <= 14.0 ? 1.0 : 0.0;
        const double z3 = (d.exposures(i, 2) - m3) / s3;
        d.outcome(i) = 1.10 - (0.05 + 0.10 * young) * z3 - 0.0008 * age +
                       0.01 * d.covariates(i, 1) - 0.002 * (d.covariates(i, 2) - 27.0) +
                       0.004 * d.covariates(i, 5) + 0.10 * unit(rng);
    }

    write_dataset_csv(dir + "/mixture_panel.csv", d);

    std::ofstream truth(dir + "/truth.json");
    truth << "{\n"
          << "  \"modifier\": \"age\",\n"
          << "  \"threshold\": 14,\n"
          << "  \"exposure\": \"pcb_3\",\n"
          << "  \"note\": \"planted interaction: a 1 SD reduction of pcb_3 raises the outcome by 0.15 for age <= 14 and 0.05 otherwise\",\n"
          << "  \"effect_v\": 0.15,\n"
          << "  \"effect_vc\": 0.05\n"
          << "}\n";

    std::cout << "wrote " << dir << "/mixture_panel.csv (" << n << " rows)\n";
    return 0;
}
