#include "shiftem/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "shiftem/csv.hpp"
#include "shiftem/errors.hpp"
#include "shiftem/stats.hpp"

namespace shiftem {

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool record_started = false;

    auto end_field = [&]() {
        record.push_back(field);
        field.clear();
    };
    auto end_record = [&]() {
        end_field();
        if (table.header.empty()) table.header = std::move(record);
        else table.rows.push_back(std::move(record));
        record = {};
        record_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"': in_quotes = true; record_started = true; break;
            case ',': end_field(); record_started = true; break;
            case '\r': break;
            case '\n':
                if (record_started || !field.empty() || !record.empty()) end_record();
                break;
            default: field.push_back(c); record_started = true; break;
        }
    }
    if (record_started || !field.empty() || !record.empty()) end_record();
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

int Dataset::exposure_index(const std::string& name) const {
    for (std::size_t i = 0; i < exposure_names.size(); ++i)
        if (exposure_names[i] == name) return static_cast<int>(i);
    return -1;
}

int Dataset::covariate_index(const std::string& name) const {
    for (std::size_t i = 0; i < covariate_names.size(); ++i)
        if (covariate_names[i] == name) return static_cast<int>(i);
    return -1;
}

Eigen::MatrixXd Dataset::design() const {
    Eigen::MatrixXd d(n(), p() + q());
    d.leftCols(p()) = exposures;
    d.rightCols(q()) = covariates;
    return d;
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
    Dataset out;
    out.covariate_names = covariate_names;
    out.exposure_names = exposure_names;
    out.outcome_name = outcome_name;
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    out.covariates.resize(m, q());
    out.exposures.resize(m, p());
    out.outcome.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        out.covariates.row(i) = covariates.row(rows[static_cast<std::size_t>(i)]);
        out.exposures.row(i) = exposures.row(rows[static_cast<std::size_t>(i)]);
        out.outcome(i) = outcome(rows[static_cast<std::size_t>(i)]);
    }
    return out;
}

void Dataset::validate() const {
    if (n() < 1) throw DataError("dataset has zero rows");
    if (covariates.rows() != n() || exposures.rows() != n())
        throw DataError("covariate/exposure/outcome row counts disagree");
    if (static_cast<Eigen::Index>(covariate_names.size()) != q() ||
        static_cast<Eigen::Index>(exposure_names.size()) != p())
        throw DataError("column name count does not match matrix shape");
    std::set<std::string> seen;
    for (const auto& name : covariate_names)
        if (!seen.insert(name).second) throw DataError("duplicate column name '" + name + "'");
    for (const auto& name : exposure_names)
        if (!seen.insert(name).second) throw DataError("duplicate column name '" + name + "'");
    if (!seen.insert(outcome_name).second) throw DataError("duplicate column name '" + outcome_name + "'");
    if (!covariates.allFinite() || !exposures.allFinite() || !outcome.allFinite())
        throw DataError("non-finite value in dataset after load");
}

namespace {

bool parse_cell(const std::string& text, double* out) {
    if (text.empty()) return false;
    const char* s = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s) return false;
    while (*end == ' ' || *end == '\t') ++end;
    if (*end != '\0') return false;
    *out = v;
    return true;
}

bool is_missing(const std::string& text) {
    return text.empty() || text == "NA" || text == "na" || text == "NaN" || text == "nan" ||
           text == "NULL" || text == "null" || text == ".";
}

LoadResult build_dataset(const CsvTable& table, const RoleMap& roles, const std::string& origin) {
    if (table.header.empty()) throw DataError(origin + ": missing header row");
    if (roles.outcome.empty()) throw ConfigError("no outcome role configured");
    if (roles.exposures.empty()) throw ConfigError("no exposure roles configured");

    auto resolve = [&](const std::string& name) {
        const int idx = table.column(name);
        if (idx < 0) throw ConfigError(origin + ": unmapped role: column '" + name + "' not in header");
        return idx;
    };

    std::vector<int> cov_idx, exp_idx;
    for (const auto& name : roles.covariates) cov_idx.push_back(resolve(name));
    for (const auto& name : roles.exposures) exp_idx.push_back(resolve(name));
    const int out_idx = resolve(roles.outcome);

    const std::size_t q = cov_idx.size();
    const std::size_t p = exp_idx.size();
    std::vector<std::vector<double>> kept;
    kept.reserve(table.rows.size());
    std::size_t dropped = 0;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::vector<double> values(q + p + 1);
        bool missing = false;
        auto grab = [&](int col, std::size_t slot) {
            if (col >= static_cast<int>(row.size()) || is_missing(row[static_cast<std::size_t>(col)])) {
                missing = true;
                return;
            }
            double v = 0.0;
            if (!parse_cell(row[static_cast<std::size_t>(col)], &v))
                throw DataError(origin + ": non-numeric cell '" + row[static_cast<std::size_t>(col)] +
                                "' in mapped column (data row " + std::to_string(r + 1) + ")");
            if (!std::isfinite(v)) {
                missing = true;
                return;
            }
            values[slot] = v;
        };
        for (std::size_t j = 0; j < q && !missing; ++j) grab(cov_idx[j], j);
        for (std::size_t j = 0; j < p && !missing; ++j) grab(exp_idx[j], q + j);
        if (!missing) grab(out_idx, q + p);
        if (missing) {
            ++dropped;
            continue;
        }
        kept.push_back(std::move(values));
    }

    if (kept.empty()) throw DataError(origin + ": zero rows survive missing-value filtering");

    LoadResult result;
    result.dropped_rows = dropped;
    Dataset& d = result.data;
    const Eigen::Index n = static_cast<Eigen::Index>(kept.size());
    d.covariates.resize(n, static_cast<Eigen::Index>(q));
    d.exposures.resize(n, static_cast<Eigen::Index>(p));
    d.outcome.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& v = kept[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < q; ++j) d.covariates(i, static_cast<Eigen::Index>(j)) = v[j];
        for (std::size_t j = 0; j < p; ++j) d.exposures(i, static_cast<Eigen::Index>(j)) = v[q + j];
        d.outcome(i) = v[q + p];
    }
    d.covariate_names = roles.covariates;
    d.exposure_names = roles.exposures;
    d.outcome_name = roles.outcome;
    d.validate();
    return result;
}

}  // namespace

LoadResult load_dataset(const std::string& csv_path, const RoleMap& roles) {
    return build_dataset(read_csv_file(csv_path), roles, csv_path);
}

LoadResult load_dataset_text(const std::string& csv_text, const RoleMap& roles,
                             const std::string& origin) {
    return build_dataset(parse_csv(csv_text), roles, origin);
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file '" + path + "'");
    char buf[64];
    bool first = true;
    auto emit_name = [&](const std::string& name) {
        if (!first) out << ',';
        out << csv_escape(name);
        first = false;
    };
    for (const auto& name : data.covariate_names) emit_name(name);
    for (const auto& name : data.exposure_names) emit_name(name);
    emit_name(data.outcome_name);
    out << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        first = true;
        auto emit = [&](double v) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            if (!first) out << ',';
            out << buf;
            first = false;
        };
        for (Eigen::Index j = 0; j < data.q(); ++j) emit(data.covariates(i, j));
        for (Eigen::Index j = 0; j < data.p(); ++j) emit(data.exposures(i, j));
        emit(data.outcome(i));
        out << '\n';
    }
}

ShiftSpec resolve_shift(const Dataset& data, const ShiftSpec& spec) {
    ShiftSpec out;
    out.units = ShiftUnits::raw;
    for (const auto& name : data.exposure_names) {
        const auto it = spec.per_exposure_delta.find(name);
        if (it == spec.per_exposure_delta.end())
            throw ConfigError("shift spec does not cover exposure '" + name + "'");
        double delta = it->second;
        // delta = 0 is the identity shift: allowed, all effects are exactly zero.
        if (!std::isfinite(delta))
            throw ConfigError("shift for exposure '" + name + "' must be finite");
        if (spec.units == ShiftUnits::sd_multiple) {
            const int j = data.exposure_index(name);
            const double sd = sample_sd(data.exposures.col(j));
            if (!(sd > 0))
                throw DataError("exposure '" + name + "' has zero variance; sd_multiple shift undefined");
            delta *= sd;
        }
        out.per_exposure_delta[name] = delta;
    }
    return out;
}

}  // namespace shiftem
