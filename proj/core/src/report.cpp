#include "shiftem/report.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "shiftem/csv.hpp"
#include "shiftem/errors.hpp"

namespace shiftem {

using nlohmann::json;

namespace {

std::string fmt(double v, const char* spec = "%.10g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string fmt4(double v) { return fmt(v, "%.4f"); }

std::string fmt_p(double p) { return p < 0.001 ? "<0.001" : fmt(p, "%.4f"); }

json rule_to_json(const PartitionRule& rule) {
    json conditions = json::array();
    for (const auto& c : rule.conditions)
        conditions.push_back({{"covariate", c.covariate},
                              {"cmp", c.cmp == Comparator::le ? "<=" : ">"},
                              {"threshold", c.threshold}});
    return {{"text", rule.to_string()}, {"conditions", conditions}};
}

PartitionRule rule_from_json(const json& j) {
    PartitionRule rule;
    for (const auto& c : j.at("conditions")) {
        Condition cond;
        cond.covariate = c.at("covariate").get<std::string>();
        cond.cmp = c.at("cmp").get<std::string>() == "<=" ? Comparator::le : Comparator::gt;
        cond.threshold = c.at("threshold").get<double>();
        rule.conditions.push_back(std::move(cond));
    }
    return rule;
}

std::string complement_text(const PartitionRule& rule) {
    if (rule.conditions.size() == 1) {
        const auto& c = rule.conditions.front();
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g", c.threshold);
        return c.covariate + (c.cmp == Comparator::le ? " > " : " <= ") + buf;
    }
    return "not (" + rule.to_string() + ")";
}

json region_to_json(const RegionEstimate& e) {
    return {{"psi", e.psi},     {"variance", e.variance}, {"se", e.se},
            {"ci_lo", e.ci_lo}, {"ci_hi", e.ci_hi},       {"p_value", e.p_value},
            {"n", e.n}};
}

json marginal_to_json(const MarginalEstimate& m) {
    return {{"exposure", m.exposure}, {"psi", m.psi},     {"se", m.se},
            {"ci_lo", m.ci_lo},       {"ci_hi", m.ci_hi}};
}

json config_to_json(const AnalysisConfig& c) {
    json outcome = json::array(), ratio = json::array();
    for (const auto& s : c.outcome_roster) outcome.push_back(s.to_string());
    for (const auto& s : c.ratio_roster) ratio.push_back(s.to_string());
    return {{"folds", c.folds},
            {"inner_folds", c.inner_folds},
            {"max_depth", c.max_depth},
            {"min_obs", c.min_obs},
            {"significance_z", c.significance_z},
            {"ratio_lo", c.ratio_lo},
            {"ratio_hi", c.ratio_hi},
            {"scale", c.scale == OutcomeScale::linear ? "linear" : "bounded_logit"},
            {"outcome_roster", outcome},
            {"ratio_roster", ratio},
            {"seed", c.seed},
            {"threads", c.threads}};
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string render() const {
        std::vector<std::size_t> width(header.size());
        for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
        for (const auto& row : rows)
            for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
        std::ostringstream os;
        auto emit = [&](const std::vector<std::string>& row) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                os << std::left << std::setw(static_cast<int>(width[c]) + 2) << row[c];
            }
            os << '\n';
        };
        emit(header);
        std::string bar;
        for (std::size_t c = 0; c < header.size(); ++c) bar += std::string(width[c], '-') + "  ";
        os << bar << '\n';
        for (const auto& row : rows) emit(row);
        return os.str();
    }
};

}  // namespace

json analysis_to_json(const AnalysisResult& result) {
    json folds = json::array();
    for (const auto& f : result.folds) {
        json jf = {{"fold", f.fold}, {"flagged", f.flagged}};
        if (f.flagged) jf["flag_reason"] = f.flag_reason;
        if (f.exposure) jf["exposure"] = *f.exposure;
        if (f.rule) jf["rule"] = rule_to_json(*f.rule);
        if (f.effect_v) jf["effect_v"] = region_to_json(*f.effect_v);
        if (f.effect_vc) jf["effect_vc"] = region_to_json(*f.effect_vc);
        json marginals = json::array();
        for (const auto& m : f.marginal) marginals.push_back(marginal_to_json(m));
        jf["marginal"] = marginals;
        folds.push_back(std::move(jf));
    }

    const PooledReport& p = result.pooled;
    json pooled = {{"folds_used", p.folds_used},
                   {"folds_flagged", p.folds_flagged},
                   {"folds_no_modifier", p.folds_no_modifier},
                   {"agreement", p.agreement}};
    if (p.region_v) pooled["region_v"] = region_to_json(*p.region_v);
    if (p.region_vc) pooled["region_vc"] = region_to_json(*p.region_vc);
    if (p.difference)
        pooled["difference"] = {{"diff", p.difference->diff},
                                {"se", p.difference->se},
                                {"z", p.difference->z},
                                {"p_value", p.difference->p_value}};
    if (p.modal_rule) pooled["modal_rule"] = rule_to_json(*p.modal_rule);
    if (p.modal_exposure) pooled["modal_exposure"] = *p.modal_exposure;
    json importance = json::array();
    for (const auto& m : p.variable_importance) importance.push_back(marginal_to_json(m));
    pooled["variable_importance"] = importance;

    json shift;
    for (const auto& [name, delta] : result.resolved_shift.per_exposure_delta) shift[name] = delta;

    return {{"kind", "analysis"},
            {"n", result.n},
            {"dropped_rows", result.dropped_rows},
            {"config", config_to_json(result.config)},
            {"shift", shift},
            {"folds", folds},
            {"pooled", pooled}};
}

json metrics_to_json(const std::vector<MetricsRow>& rows, const AnalysisConfig& config,
                     std::uint64_t seed) {
    json jrows = json::array();
    for (const auto& r : rows) {
        jrows.push_back({{"dgp", dgp_name(r.dgp)},
                         {"n", r.n},
                         {"region", r.region},
                         {"bias", r.bias},
                         {"variance", r.variance},
                         {"mse", r.mse},
                         {"coverage", r.coverage},
                         {"accuracy", r.detection.accuracy},
                         {"precision", r.detection.precision},
                         {"recall", r.detection.recall},
                         {"f1", r.detection.f1},
                         {"precision_undefined", r.detection.precision_undefined},
                         {"detection_pooled",
                          {{"accuracy", r.detection_pooled.accuracy},
                           {"precision", r.detection_pooled.precision},
                           {"recall", r.detection_pooled.recall},
                           {"f1", r.detection_pooled.f1}}},
                         {"failed_reps", r.failed_reps},
                         {"reps", r.reps}});
    }
    return {{"kind", "metrics"}, {"config", config_to_json(config)}, {"seed", seed}, {"rows", jrows}};
}

std::string fold_table_csv(const AnalysisResult& result) {
    std::ostringstream os;
    os << "Exposure,Effect,SE,Lower CI,Upper CI,Modifier,Fold\n";
    for (const auto& f : result.folds) {
        if (f.flagged || !f.rule || !f.effect_v || !f.effect_vc) continue;
        os << *f.exposure << ',' << fmt(f.effect_v->psi) << ',' << fmt(f.effect_v->se) << ','
           << fmt(f.effect_v->ci_lo) << ',' << fmt(f.effect_v->ci_hi) << ','
           << csv_escape(f.rule->to_string()) << ',' << f.fold + 1 << '\n';
        os << *f.exposure << ',' << fmt(f.effect_vc->psi) << ',' << fmt(f.effect_vc->se) << ','
           << fmt(f.effect_vc->ci_lo) << ',' << fmt(f.effect_vc->ci_hi) << ','
           << csv_escape(complement_text(*f.rule)) << ',' << f.fold + 1 << '\n';
    }
    return os.str();
}

std::string pooled_table_csv(const AnalysisResult& result) {
    std::ostringstream os;
    os << "Condition,Psi,Variance,SE,Lower CI,Upper CI,P-value\n";
    const auto& p = result.pooled;
    auto line = [&](const char* name, const RegionEstimate& e) {
        os << name << ',' << fmt(e.psi) << ',' << fmt(e.variance) << ',' << fmt(e.se) << ','
           << fmt(e.ci_lo) << ',' << fmt(e.ci_hi) << ',' << fmt(e.p_value) << '\n';
    };
    if (p.region_v) line("v", *p.region_v);
    if (p.region_vc) line("vc", *p.region_vc);
    return os.str();
}

std::string importance_table_csv(const AnalysisResult& result) {
    std::ostringstream os;
    os << "Exposure,Psi,SE,Lower CI,Upper CI\n";
    for (const auto& m : result.pooled.variable_importance)
        os << csv_escape(m.exposure) << ',' << fmt(m.psi) << ',' << fmt(m.se) << ','
           << fmt(m.ci_lo) << ',' << fmt(m.ci_hi) << '\n';
    return os.str();
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream os;
    os << "dgp,n,region,bias,variance,mse,coverage,accuracy,precision,recall,f1,failed_reps\n";
    for (const auto& r : rows)
        os << dgp_name(r.dgp) << ',' << r.n << ',' << r.region << ',' << fmt(r.bias) << ','
           << fmt(r.variance) << ',' << fmt(r.mse) << ',' << fmt(r.coverage) << ','
           << fmt(r.detection.accuracy) << ',' << fmt(r.detection.precision) << ','
           << fmt(r.detection.recall) << ',' << fmt(r.detection.f1) << ',' << r.failed_reps << '\n';
    return os.str();
}

namespace {

std::string render_analysis_text(const json& report) {
    std::ostringstream os;
    os << "Fold results\n";
    Table folds;
    folds.header = {"Exposure", "Effect", "SE", "Lower CI", "Upper CI", "Modifier", "Fold"};
    for (const auto& f : report.at("folds")) {
        if (f.value("flagged", false)) continue;
        if (!f.contains("rule") || !f.contains("effect_v") || !f.contains("effect_vc")) continue;
        const PartitionRule rule = rule_from_json(f.at("rule"));
        const auto fold_no = std::to_string(f.at("fold").get<int>() + 1);
        const auto& ev = f.at("effect_v");
        const auto& evc = f.at("effect_vc");
        folds.rows.push_back({f.at("exposure").get<std::string>(), fmt4(ev.at("psi")),
                              fmt4(ev.at("se")), fmt4(ev.at("ci_lo")), fmt4(ev.at("ci_hi")),
                              rule.to_string(), fold_no});
        folds.rows.push_back({f.at("exposure").get<std::string>(), fmt4(evc.at("psi")),
                              fmt4(evc.at("se")), fmt4(evc.at("ci_lo")), fmt4(evc.at("ci_hi")),
                              complement_text(rule), fold_no});
    }
    if (folds.rows.empty()) {
        os << "  no significant modifier in any fold\n";
    } else {
        os << folds.render();
    }

    const auto& pooled = report.at("pooled");
    os << "\nPooled region estimates\n";
    if (pooled.contains("region_v") && pooled.contains("region_vc")) {
        Table t;
        t.header = {"Condition", "Psi", "Variance", "SE", "Lower CI", "Upper CI", "P-value"};
        auto add = [&](const char* name, const json& e) {
            t.rows.push_back({name, fmt4(e.at("psi")), fmt(e.at("variance").get<double>(), "%.7g"),
                              fmt4(e.at("se")), fmt4(e.at("ci_lo")), fmt4(e.at("ci_hi")),
                              fmt_p(e.at("p_value"))});
        };
        add("v", pooled.at("region_v"));
        add("vc", pooled.at("region_vc"));
        os << t.render();
        if (pooled.contains("difference")) {
            const auto& d = pooled.at("difference");
            os << "\nDifference (v - vc): " << fmt4(d.at("diff")) << "  SE " << fmt4(d.at("se"))
               << "  Z " << fmt(d.at("z").get<double>(), "%.2f") << "  p "
               << fmt_p(d.at("p_value")) << '\n';
        }
        if (pooled.contains("modal_rule"))
            os << "Modal rule: " << pooled.at("modal_rule").at("text").get<std::string>()
               << " (exposure " << pooled.value("modal_exposure", std::string("?")) << ", agreement "
               << fmt(pooled.at("agreement").get<double>() * 100.0, "%.0f") << "%)\n";
    } else {
        os << "  no results\n";
    }

    os << "\nVariable importance (pooled marginal shift effects)\n";
    Table imp;
    imp.header = {"Exposure", "Psi", "SE", "Lower CI", "Upper CI"};
    for (const auto& m : pooled.at("variable_importance"))
        imp.rows.push_back({m.at("exposure").get<std::string>(), fmt4(m.at("psi")), fmt4(m.at("se")),
                            fmt4(m.at("ci_lo")), fmt4(m.at("ci_hi"))});
    os << imp.render();
    return os.str();
}

std::string render_metrics_text(const json& report) {
    std::ostringstream os;
    os << "Simulation metrics\n";
    Table t;
    t.header = {"dgp", "n", "region", "bias", "variance", "mse", "coverage",
                "accuracy", "precision", "recall", "f1", "failed"};
    for (const auto& r : report.at("rows")) {
        t.rows.push_back({r.at("dgp").get<std::string>(), std::to_string(r.at("n").get<long>()),
                          r.at("region").get<std::string>(), fmt4(r.at("bias")),
                          fmt(r.at("variance").get<double>(), "%.6g"),
                          fmt(r.at("mse").get<double>(), "%.6g"), fmt4(r.at("coverage")),
                          fmt4(r.at("accuracy")), fmt4(r.at("precision")), fmt4(r.at("recall")),
                          fmt4(r.at("f1")), std::to_string(r.at("failed_reps").get<int>())});
    }
    if (t.rows.empty()) {
        os << "  no results\n";
    } else {
        os << t.render();
    }
    return os.str();
}

}  // namespace

std::string render_report_text(const json& report) {
    const std::string kind = report.value("kind", std::string());
    if (kind == "analysis") return render_analysis_text(report);
    if (kind == "metrics") return render_metrics_text(report);
    throw DataError("unrecognized report kind '" + kind + "'");
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file '" + path + "'");
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace shiftem
