#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mrpred/config.hpp"
#include "mrpred/error_curve.hpp"
#include "mrpred/mc_harness.hpp"
#include "mrpred/resolution_select.hpp"

namespace mrpred {

// Shortest-safe decimal form with 17 significant digits.
std::string format_number(double v);

// Plain comma-separated table with a header row. No quoting: cells never
// contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // ConfigError if absent
  double number(std::size_t row, const std::string& name) const;
  void add_row(const std::vector<double>& values);
};

void write_csv(std::ostream& os, const CsvTable& table);
CsvTable read_csv_table(std::istream& is);

// Writes `content` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string to_csv_string(const CsvTable& table);

// Curve columns sharing one r axis; all curves must cover the same range.
CsvTable curves_to_table(const std::vector<std::string>& names, const std::vector<const ErrorCurve*>& curves);
ErrorCurve curve_from_table(const CsvTable& table, const std::string& column, CurveKind kind, int n);

CsvTable table_report_to_csv(const TableReport& report);
// Recovers the per-method rows; header fields other than rows are not in the CSV.
TableReport table_report_from_csv(const CsvTable& table);
Json to_json(const TableReport& report);
TableReport table_report_from_json(const Json& j);

CsvTable rate_report_to_csv(const RateFitReport& report);
std::vector<RatePoint> rate_points_from_csv(const CsvTable& table);
Json to_json(const RateFitReport& report);
RateFitReport rate_report_from_json(const Json& j);

CsvTable ordering_rows_to_csv(const OrderingReport& report);
CsvTable ordering_points_to_csv(const OrderingReport& report);
std::vector<OrderingRow> ordering_rows_from_csv(const CsvTable& table);
std::vector<OrderingRatePoint> ordering_points_from_csv(const CsvTable& table);
Json to_json(const OrderingReport& report);

}  // namespace mrpred
