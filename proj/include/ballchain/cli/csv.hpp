#pragma once

// Plain comma-separated tables: one header line, no quoting. Numbers are
// written in shortest round-trip form so files reload bit-exactly.

#include "ballchain/field.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ballchain::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

/// Throws ConfigError on unreadable files or ragged rows.
CsvTable read_csv(const std::filesystem::path& path);

/// bx_s0, by_s0, bz_s0, bx_s1, ...
std::vector<std::string> channel_columns(std::size_t sensor_count);

std::string format_number(double value);
/// Degrees, rounded to 10 significant digits (grid labels).
std::string format_angle(double degrees);

/// Throws ConfigError naming `context` if `text` is not a number.
double parse_number(std::string_view text, const std::string& context);

struct ReadingsFile {
  std::vector<double> phi_deg;
  std::vector<double> psi_deg;
  std::vector<MeasurementVector> readings;
};

/// Header must be phi_deg, psi_deg, then the channel columns for
/// `sensor_count` sensors. Label cells may be empty or "nan".
ReadingsFile read_readings(const std::filesystem::path& path, std::size_t sensor_count);

struct LabeledSample {
  std::string label;
  MeasurementVector reading;
  std::size_t line = 0;
};

/// Header: label, then the channel columns.
std::vector<LabeledSample> read_samples(const std::filesystem::path& path, std::size_t sensor_count);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& cells);
  const std::string& text() const { return text_; }
  /// Throws ConfigError if the file cannot be written.
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t columns_;
  std::string text_;
};

}  // namespace ballchain::cli
