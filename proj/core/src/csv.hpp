#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace petident::csv {

struct Row {
    std::size_t line = 0;  // 1-based physical line in the file
    std::vector<std::string> fields;
};

/// RFC 4180 subset: comma separated, double-quoted fields with "" escapes,
/// no embedded newlines. Blank lines are skipped. A UTF-8 BOM is ignored.
/// Throws std::invalid_argument (message carries the line) on unbalanced quotes.
std::vector<Row> parse(std::istream& in);

std::vector<Row> read_file(const std::filesystem::path& path);

std::string escape(std::string_view field);

std::string trim(std::string_view s);

}  // namespace petident::csv
