#include "mpfusion/output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mpfusion {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
  return std::string(buf, r.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::cell(const std::string& text) {
  if (text.find_first_of(",\"\n") != std::string::npos) {
    std::string quoted = "\"";
    for (char c : text) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    current_.push_back(quoted + "\"");
  } else {
    current_.push_back(text);
  }
  return *this;
}

CsvTable& CsvTable::cell(double value) { return cell(format_number(value)); }
CsvTable& CsvTable::cell(std::int64_t value) { return cell(std::to_string(value)); }
CsvTable& CsvTable::cell(const std::optional<double>& value) {
  return value ? cell(*value) : cell(std::string());
}

void CsvTable::end_row() {
  if (current_.size() != header_.size())
    throw std::logic_error("CSV row has " + std::to_string(current_.size()) + " cells, header has " +
                           std::to_string(header_.size()));
  rows_.push_back(std::move(current_));
  current_.clear();
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << str();
}

void write_json(const std::filesystem::path& path, nlohmann::json document) {
  nlohmann::ordered_json ordered;
  ordered["spec_version"] = kSpecVersion;
  for (auto& [key, value] : document.items())
    if (key != "spec_version") ordered[key] = value;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << ordered.dump(2) << '\n';
}

}  // namespace mpfusion
