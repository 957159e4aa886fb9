#include "shiftem/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace shiftem {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    int paren = 0;
    for (char c : s) {
        if (c == '(') ++paren;
        if (c == ')') --paren;
        if (c == sep && paren == 0) {
            if (!trim(item).empty()) out.push_back(trim(item));
            item.clear();
        } else {
            item.push_back(c);
        }
    }
    if (!trim(item).empty()) out.push_back(trim(item));
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected a number for " + what + ", got '" + s + "'");
    }
}

long parse_long(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected an integer for " + what + ", got '" + s + "'");
    }
}

}  // namespace

std::string learner_name(LearnerId id) {
    switch (id) {
        case LearnerId::intercept_only: return "intercept_only";
        case LearnerId::linear_ols: return "linear_ols";
        case LearnerId::logistic_glm: return "logistic_glm";
        case LearnerId::regression_tree: return "regression_tree";
        case LearnerId::gradient_boosted_stumps: return "gradient_boosted_stumps";
        case LearnerId::k_nearest: return "k_nearest";
    }
    return "unknown";
}

LearnerSpec LearnerSpec::parse(const std::string& text) {
    std::string body = trim(text);
    std::string name = body;
    std::map<std::string, double> hyper;
    const auto open = body.find('(');
    if (open != std::string::npos) {
        if (body.back() != ')') throw ConfigError("unbalanced learner spec '" + text + "'");
        name = trim(body.substr(0, open));
        const std::string args = body.substr(open + 1, body.size() - open - 2);
        for (const auto& kv : split_list(args, ',')) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("learner hyperparameter needs key=value, got '" + kv + "'");
            hyper[trim(kv.substr(0, eq))] = parse_double(trim(kv.substr(eq + 1)), "hyperparameter " + kv);
        }
    }
    LearnerSpec spec;
    spec.hyper = std::move(hyper);
    if (name == "intercept_only") spec.id = LearnerId::intercept_only;
    else if (name == "linear_ols") spec.id = LearnerId::linear_ols;
    else if (name == "logistic_glm") spec.id = LearnerId::logistic_glm;
    else if (name == "regression_tree") spec.id = LearnerId::regression_tree;
    else if (name == "gradient_boosted_stumps") spec.id = LearnerId::gradient_boosted_stumps;
    else if (name == "k_nearest") spec.id = LearnerId::k_nearest;
    else throw ConfigError("unknown learner '" + name + "'");
    return spec;
}

std::string LearnerSpec::to_string() const {
    if (hyper.empty()) return learner_name(id);
    std::ostringstream os;
    os << learner_name(id) << '(';
    bool first = true;
    for (const auto& [k, v] : hyper) {
        if (!first) os << ", ";
        os << k << '=' << v;
        first = false;
    }
    os << ')';
    return os.str();
}

std::vector<LearnerSpec> AnalysisConfig::default_outcome_roster() {
    return {
        LearnerSpec::parse("intercept_only"),
        LearnerSpec::parse("linear_ols"),
        LearnerSpec::parse("gradient_boosted_stumps(rounds=200, depth=2, shrinkage=0.1)"),
        LearnerSpec::parse("k_nearest(k=10)"),
    };
}

std::vector<LearnerSpec> AnalysisConfig::default_ratio_roster() {
    return {
        LearnerSpec::parse("intercept_only"),
        LearnerSpec::parse("logistic_glm"),
        LearnerSpec::parse("gradient_boosted_stumps(rounds=100, depth=2, shrinkage=0.1)"),
    };
}

void AnalysisConfig::finalize() {
    if (outcome_roster.empty()) outcome_roster = default_outcome_roster();
    if (ratio_roster.empty()) ratio_roster = default_ratio_roster();
    if (folds < 2) throw ConfigError("folds must be >= 2");
    if (inner_folds < 2) throw ConfigError("inner_folds must be >= 2");
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (min_obs != 0 && min_obs < 10) throw ConfigError("min_obs must be >= 10");
    if (!(significance_z > 0)) throw ConfigError("significance_z must be > 0");
    if (!(ratio_lo > 0 && ratio_lo < 1 && ratio_hi > 1))
        throw ConfigError("ratio bounds must satisfy 0 < lo < 1 < hi");
}

int AnalysisConfig::resolved_min_obs(long n) const {
    if (min_obs > 0) return min_obs;
    return static_cast<int>(std::max<long>(25, n / 20));
}

namespace {

struct IniFile {
    // section -> ordered key/value pairs (duplicates preserved in order)
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;

    const std::vector<std::pair<std::string, std::string>>* find(const std::string& name) const {
        for (const auto& [sec, kvs] : sections)
            if (sec == name) return &kvs;
        return nullptr;
    }
};

IniFile parse_ini(const std::string& text, const std::string& origin) {
    IniFile ini;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            current = trim(line.substr(1, line.size() - 2));
            ini.sections.push_back({current, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (current.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any section");
        ini.sections.back().second.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return ini;
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
    const IniFile ini = parse_ini(text, origin);
    RunConfig rc;

    if (const auto* cols = ini.find("columns")) {
        for (const auto& [key, value] : *cols) {
            if (key == "covariates") rc.roles.covariates = split_list(value, ',');
            else if (key == "exposures") rc.roles.exposures = split_list(value, ',');
            else if (key == "outcome") rc.roles.outcome = value;
            else throw ConfigError(origin + ": unknown [columns] key '" + key + "'");
        }
    }
    if (const auto* shift = ini.find("shift")) {
        for (const auto& [key, value] : *shift) {
            if (key == "units") {
                if (value == "raw") rc.shift.units = ShiftUnits::raw;
                else if (value == "sd_multiple") rc.shift.units = ShiftUnits::sd_multiple;
                else throw ConfigError(origin + ": units must be raw or sd_multiple");
            } else if (key == "all") {
                const double d = parse_double(value, "[shift] all");
                for (const auto& e : rc.roles.exposures) rc.shift.per_exposure_delta[e] = d;
            } else {
                rc.shift.per_exposure_delta[key] = parse_double(value, "[shift] " + key);
            }
        }
    }
    if (const auto* search = ini.find("search")) {
        for (const auto& [key, value] : *search) {
            if (key == "folds") rc.analysis.folds = static_cast<int>(parse_long(value, "folds"));
            else if (key == "inner_folds") rc.analysis.inner_folds = static_cast<int>(parse_long(value, "inner_folds"));
            else if (key == "max_depth") rc.analysis.max_depth = static_cast<int>(parse_long(value, "max_depth"));
            else if (key == "min_obs") rc.analysis.min_obs = static_cast<int>(parse_long(value, "min_obs"));
            else if (key == "significance_z") rc.analysis.significance_z = parse_double(value, "significance_z");
            else if (key == "ratio_lo") rc.analysis.ratio_lo = parse_double(value, "ratio_lo");
            else if (key == "ratio_hi") rc.analysis.ratio_hi = parse_double(value, "ratio_hi");
            else if (key == "scale") {
                if (value == "linear") rc.analysis.scale = OutcomeScale::linear;
                else if (value == "bounded_logit") rc.analysis.scale = OutcomeScale::bounded_logit;
                else throw ConfigError(origin + ": scale must be linear or bounded_logit");
            } else throw ConfigError(origin + ": unknown [search] key '" + key + "'");
        }
    }
    if (const auto* learners = ini.find("learners")) {
        for (const auto& [key, value] : *learners) {
            std::vector<LearnerSpec> roster;
            for (const auto& item : split_list(value, ',')) roster.push_back(LearnerSpec::parse(item));
            if (key == "outcome") rc.analysis.outcome_roster = std::move(roster);
            else if (key == "ratio") rc.analysis.ratio_roster = std::move(roster);
            else throw ConfigError(origin + ": unknown [learners] key '" + key + "'");
        }
    }
    if (const auto* run = ini.find("run")) {
        for (const auto& [key, value] : *run) {
            if (key == "seed") rc.analysis.seed = static_cast<std::uint64_t>(parse_long(value, "seed"));
            else if (key == "threads") rc.analysis.threads = static_cast<int>(parse_long(value, "threads"));
            else if (key == "data") rc.csv_path = value;
            else throw ConfigError(origin + ": unknown [run] key '" + key + "'");
        }
    }

    rc.analysis.finalize();
    return rc;
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config_text(buf.str(), path);
}

}  // namespace shiftem
