#include "memdeeg/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "memdeeg/error.hpp"

namespace memdeeg::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view cell, double& out) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

}  // namespace

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

NumericTable parse_numeric(std::string_view text) {
  NumericTable table;
  std::vector<double> values;
  std::size_t columns = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (trim(line).empty()) continue;

    auto cells = split_line(line);
    if (rows == 0 && !table.header) {
      bool numeric = true;
      double dummy = 0.0;
      for (const auto& c : cells) numeric = numeric && parse_double(c, dummy);
      if (!numeric) {
        table.header = cells;
        columns = cells.size();
        continue;
      }
    }
    if (columns == 0) columns = cells.size();
    if (cells.size() != columns) {
      throw Error(ErrorCode::MalformedFile, "line " + std::to_string(line_no) + " has " +
                                                std::to_string(cells.size()) + " cells, expected " +
                                                std::to_string(columns));
    }
    for (const auto& c : cells) {
      double v = 0.0;
      if (!parse_double(c, v) || !std::isfinite(v)) {
        throw Error(ErrorCode::MalformedFile,
                    "line " + std::to_string(line_no) + ": invalid number '" + c + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  table.rows = Matrix(rows, columns);
  std::copy(values.begin(), values.end(), table.rows.values().begin());
  return table;
}

NumericTable read_numeric(const std::filesystem::path& path) { return parse_numeric(read_file(path)); }

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_row(std::ostream& os, std::span<const std::string> cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::Io, "cannot open for writing: " + path.string());
  return os;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace memdeeg::csv
