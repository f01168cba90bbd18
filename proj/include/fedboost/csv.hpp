#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fedboost::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws Error(kIo) when absent.
  std::size_t column(const std::string& name) const;
};

// Plain comma-separated text: no quoting, no embedded commas. Blank lines skipped.
Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);

double to_double(const std::string& cell);
long long to_integer(const std::string& cell);

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace fedboost::csv
