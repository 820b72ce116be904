#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pae::report {

struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

/// One experiment's results. Everything except `timing` is a pure function
/// of the checkpoints, dataset and config, so it is written separately.
struct Report {
  std::string kind;
  std::string config_digest;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
  std::vector<Table> tables;
  nlohmann::json timing = nlohmann::json::object();
};

inline constexpr const char* kSchema = "pae-report-1";

nlohmann::json to_json(const Report& report);
Report from_json(const nlohmann::json& j);

/// Fixed-point text with `precision` decimals.
std::string fixed(double value, int precision = 3);

/// Columns padded to their widest cell, numeric-looking cells right-aligned.
std::string render_table(const Table& table);
std::string render_text(const Report& report);

/// Writes <kind>.report.json and <kind>.report.txt, plus <kind>.timing.json
/// when timing is present.
void write_report(const Report& report, const std::filesystem::path& dir);
Report read_report(const std::filesystem::path& path);

}  // namespace pae::report
