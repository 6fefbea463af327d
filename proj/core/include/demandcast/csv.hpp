#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace demandcast {

// Splits one CSV line on commas. No quoting support: none of the formats
// defined here embed commas in fields.
std::vector<std::string> split_csv_line(const std::string& line);

// Calls `row` for every line of a possibly gzip-compressed text file
// (compression detected by a .gz extension). Line numbers are 1-based.
void for_each_line(const std::string& path,
                   const std::function<void(std::size_t line_no, const std::string& line)>& row);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace demandcast
