#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memdeeg/matrix.hpp"

namespace memdeeg::csv {

struct NumericTable {
  std::optional<std::vector<std::string>> header;
  Matrix rows;  // rows x columns, as laid out in the file
};

std::vector<std::string> split_line(std::string_view line);

// Parses a numeric CSV. A first row containing any non-numeric cell is taken
// as the header; any later non-numeric or non-finite cell is an error.
NumericTable read_numeric(const std::filesystem::path& path);
NumericTable parse_numeric(std::string_view text);

// Shortest round-trippable decimal form.
std::string format_double(double v);

void write_row(std::ostream& os, std::span<const std::string> cells);

std::ofstream open_for_write(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);

}  // namespace memdeeg::csv
