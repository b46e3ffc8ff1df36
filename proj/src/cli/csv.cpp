#include "ballchain/cli/csv.hpp"

#include "ballchain/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace ballchain::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                 : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

void check_header(const CsvTable& table, const std::vector<std::string>& expected,
                  const std::filesystem::path& path) {
  if (table.header == expected) return;
  std::string want;
  for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
  if (table.header.size() != expected.size()) {
    throw ConfigError(path.string() + ": header has " + std::to_string(table.header.size()) +
                      " columns, expected " + std::to_string(expected.size()) + " (" + want + ")");
  }
  throw ConfigError(path.string() + ": header must be " + want);
}

MeasurementVector parse_channels(const std::vector<std::string>& row, std::size_t offset,
                                 const std::vector<std::string>& header, const std::string& where) {
  MeasurementVector q(static_cast<Eigen::Index>(row.size() - offset));
  for (std::size_t c = offset; c < row.size(); ++c) {
    q[static_cast<Eigen::Index>(c - offset)] = parse_number(row[c], where + " column " + header[c]);
  }
  return q;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields, found " +
                        std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw ConfigError(path.string() + ": empty file (missing header)");
  return table;
}

std::vector<std::string> channel_columns(std::size_t sensor_count) {
  std::vector<std::string> cols;
  cols.reserve(3 * sensor_count);
  for (std::size_t j = 0; j < sensor_count; ++j) {
    for (const char* axis : {"bx", "by", "bz"}) cols.push_back(std::string(axis) + "_s" + std::to_string(j));
  }
  return cols;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_angle(double degrees) {
  if (!std::isfinite(degrees)) return format_number(degrees);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", degrees);
  std::string s(buf);
  return s == "-0" ? "0" : s;
}

double parse_number(std::string_view text, const std::string& context) {
  if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
  std::string_view t = text;
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError(context + ": '" + std::string(text) + "' is not a number");
  }
  return value;
}

ReadingsFile read_readings(const std::filesystem::path& path, std::size_t sensor_count) {
  const CsvTable table = read_csv(path);
  std::vector<std::string> expected{"phi_deg", "psi_deg"};
  for (auto& c : channel_columns(sensor_count)) expected.push_back(std::move(c));
  check_header(table, expected, path);

  ReadingsFile out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
    out.phi_deg.push_back(row[0].empty() ? std::nan("") : parse_number(row[0], where + " column phi_deg"));
    out.psi_deg.push_back(row[1].empty() ? std::nan("") : parse_number(row[1], where + " column psi_deg"));
    out.readings.push_back(parse_channels(row, 2, table.header, where));
  }
  return out;
}

std::vector<LabeledSample> read_samples(const std::filesystem::path& path, std::size_t sensor_count) {
  const CsvTable table = read_csv(path);
  std::vector<std::string> expected{"label"};
  for (auto& c : channel_columns(sensor_count)) expected.push_back(std::move(c));
  check_header(table, expected, path);

  std::vector<LabeledSample> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
    if (row[0].empty()) throw ConfigError(where + ": empty label");
    out.push_back({row[0], parse_channels(row, 1, table.header, where), table.line_numbers[r]});
  }
  return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  add_row(header);
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("CsvWriter: row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
}

void CsvWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text_;
  if (!out) throw ConfigError("error writing '" + path.string() + "'");
}

}  // namespace ballchain::cli
