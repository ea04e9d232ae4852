#ifndef POLICYBOUNDS_REPORT_HPP
#define POLICYBOUNDS_REPORT_HPP

#include <json.hpp>
#include <string>

namespace policybounds::report {

enum class OutputFormat { Json, Csv, Human };

OutputFormat parse_format(const std::string& name);

/// Canonical JSON: keys sorted, floats rendered with %.10g, no whitespace
/// variance. Identical documents serialize to identical bytes, which the
/// golden-file and determinism tests rely on.
std::string emit_json(const nlohmann::json& doc);

/// One CSV row per entry of doc["results"], fixed column order:
/// name,kind,lower,upper,status,level,method. Missing fields are empty.
std::string emit_csv(const nlohmann::json& doc);

/// Interval notation for people: "name: [lower, upper]" lines plus warnings
/// and timings.
std::string emit_human(const nlohmann::json& doc);

std::string emit(const nlohmann::json& doc, OutputFormat format);

}  // namespace policybounds::report

#endif  // POLICYBOUNDS_REPORT_HPP
