#include "ksnno/output.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace ksnno {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  return fmt::format("{:.12g}", v);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  if (header.empty()) throw std::invalid_argument("csv: empty header");
  add_row(header);
}

void CsvWriter::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  add_row(cells);
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) {
    throw std::invalid_argument(fmt::format("csv: row has {} cells, header has {}", cells.size(), columns_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string svg_loglog_plot(const std::string& title, const std::vector<SvgSeries>& series) {
  constexpr double kWidth = 640, kHeight = 420, kMargin = 60;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      if (x <= 0 || y <= 0) continue;
      xmin = std::min(xmin, std::log10(x));
      xmax = std::max(xmax, std::log10(x));
      ymin = std::min(ymin, std::log10(y));
      ymax = std::max(ymax, std::log10(y));
    }
  }
  if (!(xmax > xmin)) xmax = xmin + 1, xmin -= 1;
  if (!(ymax > ymin)) ymax = ymin + 1, ymin -= 1;
  auto px = [&](double x) { return kMargin + (std::log10(x) - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin); };
  auto py = [&](double y) {
    return kHeight - kMargin - (std::log10(y) - ymin) / (ymax - ymin) * (kHeight - 2 * kMargin);
  };
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n"
      "<text x=\"{}\" y=\"24\" font-size=\"14\">{}</text>\n"
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
      kWidth, kHeight, kMargin, title, kMargin, kMargin, kWidth - 2 * kMargin, kHeight - 2 * kMargin);
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::string pts;
    for (auto [x, y] : series[i].points) {
      if (x <= 0 || y <= 0) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(x), py(y));
    }
    const char* colour = colours[i % std::size(colours)];
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", colour, pts);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{}\">{}</text>\n", kWidth - kMargin - 150,
                       kMargin + 16 * (i + 1), colour, series[i].label);
  }
  out += "</svg>\n";
  return out;
}

void OutputBundle::add(const std::string& name, std::string content) { files_[name] = std::move(content); }

std::map<std::string, std::string> OutputBundle::digests() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, content] : files_) out[name] = sha256_hex(content);
  return out;
}

void OutputBundle::commit(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : files_) {
    const std::filesystem::path target = dir / name;
    const std::filesystem::path temp = dir / (".tmp-" + name);
    {
      std::ofstream out(temp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", temp.string()));
      out << content;
      if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", temp.string()));
    }
    std::filesystem::rename(temp, target);
  }
}

}  // namespace ksnno
