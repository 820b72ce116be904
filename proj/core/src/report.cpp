#include "pae/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "binio.hpp"
#include "pae/error.hpp"

namespace pae::report {

using nlohmann::json;

json to_json(const Report& report) {
  json tables = json::array();
  for (const auto& t : report.tables) {
    tables.push_back(json{{"title", t.title}, {"columns", t.columns}, {"rows", t.rows}});
  }
  return json{{"schema", kSchema},
              {"kind", report.kind},
              {"config_digest", report.config_digest},
              {"config", report.config},
              {"results", report.results},
              {"tables", tables}};
}

Report from_json(const json& j) {
  if (j.value("schema", "") != kSchema) throw ValidationError("not a report document");
  Report r;
  r.kind = j.at("kind").get<std::string>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.config = j.at("config");
  r.results = j.at("results");
  for (const auto& t : j.at("tables")) {
    r.tables.push_back(Table{t.at("title").get<std::string>(), t.at("columns").get<std::vector<std::string>>(),
                             t.at("rows").get<std::vector<std::vector<std::string>>>()});
  }
  return r;
}

std::string fixed(double value, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
  return buf;
}

namespace {

bool numeric(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'x' || c == '%';
  });
}

}  // namespace

std::string render_table(const Table& table) {
  std::vector<std::size_t> width(table.columns.size(), 0);
  for (std::size_t c = 0; c < table.columns.size(); ++c) width[c] = table.columns[c].size();
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw ValidationError("table '" + table.title + "' has a ragged row");
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells, bool header) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::size_t pad = width[c] - cells[c].size();
      if (c > 0) out << "  ";
      if (!header && numeric(cells[c])) {
        out << std::string(pad, ' ') << cells[c];
      } else {
        out << cells[c] << (c + 1 < cells.size() ? std::string(pad, ' ') : "");
      }
    }
    out << '\n';
  };
  out << table.title << '\n';
  emit(table.columns, true);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
  for (const auto& row : table.rows) emit(row, false);
  return out.str();
}

std::string render_text(const Report& report) {
  std::ostringstream out;
  out << "report: " << report.kind << "  config " << report.config_digest << "\n\n";
  for (const auto& t : report.tables) out << render_table(t) << '\n';
  return out.str();
}

void write_report(const Report& report, const std::filesystem::path& dir) {
  detail::write_file(dir / (report.kind + ".report.json"), to_json(report).dump(2) + "\n");
  detail::write_file(dir / (report.kind + ".report.txt"), render_text(report));
  if (!report.timing.empty()) {
    detail::write_file(dir / (report.kind + ".timing.json"), report.timing.dump(2) + "\n");
  }
}

Report read_report(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError("cannot parse report " + path.string() + ": " + e.what());
  }
}

}  // namespace pae::report
