#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace mpfusion {

inline constexpr const char* kSpecVersion = "1.0";

/// Shortest round-trip form limited to 9 significant digits, locale independent.
std::string format_number(double value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& cell(const std::string& text);
  CsvTable& cell(double value);
  CsvTable& cell(std::int64_t value);
  CsvTable& cell(int value) { return cell(static_cast<std::int64_t>(value)); }
  CsvTable& cell(const std::optional<double>& value);  // empty when unavailable
  void end_row();

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::string> current_;
};

/// Writes `document` with a leading spec_version field.
void write_json(const std::filesystem::path& path, nlohmann::json document);

}  // namespace mpfusion
