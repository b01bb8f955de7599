#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ksnno {

// Fixed-format number for CSV/JSON output ('.' decimal separator, 12 significant digits).
std::string format_number(double v);

// Builds CSV text: header row, LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(const std::vector<double>& values);
  void add_row(const std::vector<std::string>& cells);

  std::string str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

std::string sha256_hex(const std::string& data);

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Log-log line plot, one polyline per series.
std::string svg_loglog_plot(const std::string& title, const std::vector<SvgSeries>& series);

// Files are staged in memory and only land in the target directory on
// commit(), each through a temporary file and rename.
class OutputBundle {
 public:
  void add(const std::string& name, std::string content);
  const std::map<std::string, std::string>& files() const { return files_; }
  std::map<std::string, std::string> digests() const;

  void commit(const std::filesystem::path& dir) const;

 private:
  std::map<std::string, std::string> files_;
};

}  // namespace ksnno
