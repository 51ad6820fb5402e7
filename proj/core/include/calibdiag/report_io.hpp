#pragma once

// JSON and CSV emission. Numbers are written with 17 significant digits so
// that parsing them back gives the same doubles; non-finite values become null.

#include <string>

#include "calibdiag/data.hpp"
#include "calibdiag/diagnostic.hpp"
#include "calibdiag/experiments.hpp"

namespace calibdiag {

std::string format_number(double v);

std::string report_to_json(const DiagnosticReport& report);
DiagnosticReport report_from_json(const std::string& text);

std::string estimate_to_json(const TauEstimate& estimate);
TauEstimate estimate_from_json(const std::string& text);

std::string table_to_csv(const Table& table);
std::string table_to_json(const Table& table);

enum class OutputFormat { json, csv };

OutputFormat output_format_from_string(std::string_view s);

// JSON, or long-form CSV with columns field, threshold, value.
std::string format_report(const DiagnosticReport& report, OutputFormat format);

// Writes to `path`; IoError names the path on failure.
void emit_report(const DiagnosticReport& report, OutputFormat format, const std::string& path);
void emit_table(const Table& table, OutputFormat format, const std::string& path);

}  // namespace calibdiag
