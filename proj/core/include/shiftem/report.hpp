#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "shiftem/cv.hpp"
#include "shiftem/simulate.hpp"

namespace shiftem {

// All emitted numbers use locale-independent formatting and reports carry the
// resolved config and seed instead of timestamps, so identical inputs produce
// byte-identical files.

nlohmann::json analysis_to_json(const AnalysisResult& result);
nlohmann::json metrics_to_json(const std::vector<MetricsRow>& rows, const AnalysisConfig& config,
                               std::uint64_t seed);

std::string fold_table_csv(const AnalysisResult& result);
std::string pooled_table_csv(const AnalysisResult& result);
std::string importance_table_csv(const AnalysisResult& result);
std::string metrics_csv(const std::vector<MetricsRow>& rows);

/// Aligned plain-text tables from a JSON report (analyze or simulate output);
/// column order matches the CSV layouts.
std::string render_report_text(const nlohmann::json& report);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace shiftem
