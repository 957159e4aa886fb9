#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "shiftem/cv.hpp"
#include "shiftem/dataset.hpp"
#include "shiftem/errors.hpp"
#include "shiftem/report.hpp"
#include "shiftem/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitEstimation = 4;

struct CommonOpts {
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = -1;
};

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw shiftem::ConfigError("cannot create output directory '" + dir + "'");
}

int run_analyze(const std::string& config_path, const std::string& data_override,
                const CommonOpts& common, const std::vector<std::string>& delta_overrides) {
    shiftem::RunConfig rc = shiftem::parse_run_config(config_path);
    if (!data_override.empty()) rc.csv_path = data_override;
    if (rc.csv_path.empty())
        throw shiftem::ConfigError("no data file: set [run] data or pass --data");
    if (common.seed_set) rc.analysis.seed = common.seed;
    if (common.threads >= 0) rc.analysis.threads = common.threads;
    for (const auto& item : delta_overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw shiftem::ConfigError("--delta expects NAME=VALUE, got '" + item + "'");
        rc.shift.per_exposure_delta[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }

    const shiftem::LoadResult loaded = shiftem::load_dataset(rc.csv_path, rc.roles);
    shiftem::AnalysisResult result =
        shiftem::run_cv_pipeline(loaded.data, rc.shift, rc.analysis);
    result.dropped_rows = loaded.dropped_rows;

    ensure_out_dir(common.out_dir);
    const fs::path out(common.out_dir);
    const json report = shiftem::analysis_to_json(result);
    shiftem::write_text_file((out / "report.json").string(), report.dump(2) + "\n");
    shiftem::write_text_file((out / "fold_results.csv").string(), shiftem::fold_table_csv(result));
    shiftem::write_text_file((out / "pooled.csv").string(), shiftem::pooled_table_csv(result));
    shiftem::write_text_file((out / "variable_importance.csv").string(),
                             shiftem::importance_table_csv(result));
    std::cout << shiftem::render_report_text(report);
    return 0;
}

int run_simulate(const std::string& dgp_name, const std::string& ns_csv, int reps,
                 const std::string& config_path, const CommonOpts& common) {
    const shiftem::Dgp dgp = shiftem::parse_dgp(dgp_name);
    std::vector<Eigen::Index> ns;
    {
        std::string item;
        std::istringstream in(ns_csv);
        while (std::getline(in, item, ',')) {
            if (item.empty()) continue;
            const long v = std::stol(item);
            if (v < 1) throw shiftem::ConfigError("sample sizes must be positive");
            ns.push_back(static_cast<Eigen::Index>(v));
        }
    }
    if (ns.empty()) throw shiftem::ConfigError("--ns needs at least one sample size");

    shiftem::AnalysisConfig config = shiftem::default_sim_config();
    if (!config_path.empty()) config = shiftem::parse_run_config(config_path).analysis;
    if (common.seed_set) config.seed = common.seed;
    if (common.threads >= 0) config.threads = common.threads;

    const auto rows = shiftem::run_sim_grid(ns, reps, dgp, config, config.seed);

    ensure_out_dir(common.out_dir);
    const fs::path out(common.out_dir);
    const json report = shiftem::metrics_to_json(rows, config, config.seed);
    shiftem::write_text_file((out / "metrics.json").string(), report.dump(2) + "\n");
    shiftem::write_text_file((out / "metrics.csv").string(), shiftem::metrics_csv(rows));
    std::cout << shiftem::render_report_text(report);
    return 0;
}

int run_report(const std::string& input) {
    json report;
    try {
        report = json::parse(shiftem::read_text_file(input));
    } catch (const json::parse_error& e) {
        throw shiftem::DataError("malformed JSON in '" + input + "': " + e.what());
    }
    std::cout << shiftem::render_report_text(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subpopulation discovery and estimation for exposure shift interventions"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string config_path, data_override, dgp = "binary", ns_csv = "1000", report_input;
    std::vector<std::string> delta_overrides;
    int reps = 10;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", common.out_dir, "Output directory");
        cmd->add_option("--seed", common.seed, "Seed override")->each([&](const std::string&) {
            common.seed_set = true;
        });
        cmd->add_option("--threads", common.threads, "Worker cap (0 = hardware)");
    };

    CLI::App* analyze = app.add_subcommand("analyze", "Run the full pipeline on a CSV");
    analyze->add_option("--config", config_path, "INI config file")->required();
    analyze->add_option("--data", data_override, "CSV path (overrides [run] data)");
    analyze->add_option("--delta", delta_overrides, "Shift override NAME=VALUE (repeatable)");
    add_common(analyze);

    CLI::App* simulate = app.add_subcommand("simulate", "Run a replication grid on a synthetic generator");
    simulate->add_option("--dgp", dgp, "binary | continuous");
    simulate->add_option("--ns", ns_csv, "Comma-separated sample sizes");
    simulate->add_option("--reps", reps, "Replications per sample size");
    simulate->add_option("--config", config_path, "Optional INI config for the analysis settings");
    add_common(simulate);

    CLI::App* report = app.add_subcommand("report", "Render a JSON report as text tables");
    report->add_option("--input", report_input, "report.json or metrics.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (analyze->parsed()) return run_analyze(config_path, data_override, common, delta_overrides);
        if (simulate->parsed()) return run_simulate(dgp, ns_csv, reps, config_path, common);
        if (report->parsed()) return run_report(report_input);
    } catch (const shiftem::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const shiftem::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const shiftem::EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
