#include "mrpred/report_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mrpred/errors.hpp"

namespace mrpred {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

double parse_number(const std::string& cell, const std::string& column) {
  if (cell == "nan") return std::nan("");
  if (cell == "inf") return INFINITY;
  if (cell == "-inf") return -INFINITY;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw ConfigError("csv column " + column + ": bad number '" + cell + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ConfigError("csv: missing column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  return parse_number(rows.at(row).at(column(name)), name);
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  rows.push_back(std::move(cells));
}

void write_csv(std::ostream& os, const CsvTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) os << (i ? "," : "") << table.header[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

CsvTable read_csv_table(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("csv: missing header");
  t.header = split(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) throw ConfigError("csv: ragged row");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::string to_csv_string(const CsvTable& table) {
  std::ostringstream os;
  write_csv(os, table);
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

CsvTable curves_to_table(const std::vector<std::string>& names, const std::vector<const ErrorCurve*>& curves) {
  if (names.size() != curves.size() || curves.empty()) throw DomainError("curves_to_table: names and curves differ");
  const int lo = curves.front()->first_r;
  const int hi = curves.front()->last_r();
  for (const auto* c : curves)
    if (c->first_r != lo || c->last_r() != hi) throw DomainError("curves_to_table: curves cover different ranges");
  CsvTable t;
  t.header.push_back("r");
  t.header.insert(t.header.end(), names.begin(), names.end());
  for (int r = lo; r <= hi; ++r) {
    std::vector<double> row{static_cast<double>(r)};
    for (const auto* c : curves) row.push_back(c->at(r));
    t.add_row(row);
  }
  return t;
}

ErrorCurve curve_from_table(const CsvTable& table, const std::string& column, CurveKind kind, int n) {
  ErrorCurve c;
  c.kind = kind;
  c.n = n;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const int r = static_cast<int>(table.number(i, "r"));
    if (i == 0) {
      c.first_r = r;
    } else if (r != c.first_r + static_cast<int>(i)) {
      throw ConfigError("csv: r column is not contiguous");
    }
    c.values.push_back(table.number(i, column));
  }
  return c;
}

// ---------------------------------------------------------------------------

CsvTable table_report_to_csv(const TableReport& report) {
  CsvTable t;
  t.header = {"method", "mean_R", "qr_lo_R", "qr_hi_R", "mean_stdPE", "qr_lo_stdPE", "qr_hi_stdPE"};
  for (const auto& row : report.rows) {
    t.rows.push_back({to_string(row.method), format_number(row.mean_R), format_number(row.qr_lo_R),
                      format_number(row.qr_hi_R), format_number(row.mean_std_pe), format_number(row.qr_lo_std_pe),
                      format_number(row.qr_hi_std_pe)});
  }
  return t;
}

TableReport table_report_from_csv(const CsvTable& table) {
  TableReport rep;
  const auto method_col = table.column("method");
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    TableRow row;
    row.method = parse_method(table.rows[i][method_col]);
    row.mean_R = table.number(i, "mean_R");
    row.qr_lo_R = table.number(i, "qr_lo_R");
    row.qr_hi_R = table.number(i, "qr_hi_R");
    row.mean_std_pe = table.number(i, "mean_stdPE");
    row.qr_lo_std_pe = table.number(i, "qr_lo_stdPE");
    row.qr_hi_std_pe = table.number(i, "qr_hi_stdPE");
    rep.rows.push_back(row);
  }
  return rep;
}

Json to_json(const TableReport& report) {
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"method", to_string(row.method)},
                    {"mean_R", row.mean_R},
                    {"qr_R", {row.qr_lo_R, row.qr_hi_R}},
                    {"mean_stdPE", row.mean_std_pe},
                    {"qr_stdPE", {row.qr_lo_std_pe, row.qr_hi_std_pe}}});
  }
  return Json{{"profile", report.profile}, {"tau2", report.tau2}, {"n", report.n},       {"reps", report.reps},
              {"r_opt", report.r_opt},     {"pe_opt", report.pe_opt}, {"rows", rows}};
}

TableReport table_report_from_json(const Json& j) {
  TableReport rep;
  rep.profile = j.at("profile").get<std::string>();
  rep.tau2 = j.at("tau2").get<double>();
  rep.n = j.at("n").get<int>();
  rep.reps = j.at("reps").get<int>();
  rep.r_opt = j.at("r_opt").get<int>();
  rep.pe_opt = j.at("pe_opt").get<double>();
  for (const auto& r : j.at("rows")) {
    TableRow row;
    row.method = parse_method(r.at("method").get<std::string>());
    row.mean_R = r.at("mean_R").get<double>();
    row.qr_lo_R = r.at("qr_R")[0].get<double>();
    row.qr_hi_R = r.at("qr_R")[1].get<double>();
    row.mean_std_pe = r.at("mean_stdPE").get<double>();
    row.qr_lo_std_pe = r.at("qr_stdPE")[0].get<double>();
    row.qr_hi_std_pe = r.at("qr_stdPE")[1].get<double>();
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------

CsvTable rate_report_to_csv(const RateFitReport& report) {
  CsvTable t;
  t.header = {"n", "R", "L", "r_cap", "interior"};
  for (const auto& p : report.points)
    t.add_row({static_cast<double>(p.n), static_cast<double>(p.R), p.L, static_cast<double>(p.r_cap),
               p.interior ? 1.0 : 0.0});
  return t;
}

std::vector<RatePoint> rate_points_from_csv(const CsvTable& table) {
  std::vector<RatePoint> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    RatePoint p;
    p.n = static_cast<int>(table.number(i, "n"));
    p.R = static_cast<int>(table.number(i, "R"));
    p.L = table.number(i, "L");
    p.r_cap = static_cast<int>(table.number(i, "r_cap"));
    p.interior = table.number(i, "interior") != 0.0;
    out.push_back(p);
  }
  return out;
}

Json to_json(const RateFitReport& report) {
  Json pts = Json::array();
  for (const auto& p : report.points)
    pts.push_back({{"n", p.n}, {"R", p.R}, {"L", p.L}, {"r_cap", p.r_cap}, {"interior", p.interior}});
  return Json{{"profile", report.profile},
              {"error_model", report.error_model},
              {"transform", to_string(report.transform)},
              {"fit_first", report.fit_first},
              {"slope", report.fit.slope},
              {"intercept", report.fit.intercept},
              {"r_squared", report.fit.r_squared},
              {"all_interior", report.all_interior},
              {"points", pts}};
}

RateFitReport rate_report_from_json(const Json& j) {
  RateFitReport rep;
  rep.profile = j.at("profile").get<std::string>();
  rep.error_model = j.at("error_model").get<std::string>();
  rep.transform = parse_rate_transform(j.at("transform").get<std::string>());
  rep.fit_first = j.at("fit_first").get<int>();
  rep.fit.slope = j.at("slope").get<double>();
  rep.fit.intercept = j.at("intercept").get<double>();
  rep.fit.r_squared = j.at("r_squared").get<double>();
  rep.all_interior = j.at("all_interior").get<bool>();
  for (const auto& p : j.at("points"))
    rep.points.push_back({p.at("n").get<int>(), p.at("R").get<int>(), p.at("L").get<double>(),
                          p.at("r_cap").get<int>(), p.at("interior").get<bool>()});
  return rep;
}

// ---------------------------------------------------------------------------

CsvTable ordering_rows_to_csv(const OrderingReport& report) {
  CsvTable t;
  t.header = {"r", "M_r", "A_r", "A_perm_r", "A_shifted_r"};
  for (const auto& row : report.rows)
    t.add_row({static_cast<double>(row.r), static_cast<double>(row.mistakes), row.A, row.A_perm, row.A_shifted});
  return t;
}

CsvTable ordering_points_to_csv(const OrderingReport& report) {
  CsvTable t;
  t.header = {"n", "R", "A_R", "A_perm_R", "ratio"};
  for (const auto& p : report.points)
    t.add_row({static_cast<double>(p.n), static_cast<double>(p.R), p.A, p.A_perm, p.ratio});
  return t;
}

std::vector<OrderingRow> ordering_rows_from_csv(const CsvTable& table) {
  std::vector<OrderingRow> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    OrderingRow row;
    row.r = static_cast<int>(table.number(i, "r"));
    row.mistakes = static_cast<int>(table.number(i, "M_r"));
    row.A = table.number(i, "A_r");
    row.A_perm = table.number(i, "A_perm_r");
    row.A_shifted = table.number(i, "A_shifted_r");
    out.push_back(row);
  }
  return out;
}

std::vector<OrderingRatePoint> ordering_points_from_csv(const CsvTable& table) {
  std::vector<OrderingRatePoint> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    OrderingRatePoint p;
    p.n = static_cast<int>(table.number(i, "n"));
    p.R = static_cast<int>(table.number(i, "R"));
    p.A = table.number(i, "A_R");
    p.A_perm = table.number(i, "A_perm_R");
    p.ratio = table.number(i, "ratio");
    out.push_back(p);
  }
  return out;
}

Json to_json(const OrderingReport& report) {
  Json pts = Json::array();
  for (const auto& p : report.points)
    pts.push_back({{"n", p.n}, {"R", p.R}, {"A_R", p.A}, {"A_perm_R", p.A_perm}, {"ratio", p.ratio}});
  return Json{{"profile", report.profile},
              {"permutation", report.permutation},
              {"error_model", report.error_model},
              {"max_ratio", report.max_ratio},
              {"nested_inequality_holds", report.nested_inequality_holds},
              {"points", pts}};
}

}  // namespace mrpred
