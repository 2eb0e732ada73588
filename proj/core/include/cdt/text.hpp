#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cdt {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
std::vector<std::string> split(std::string_view s, char sep);

// Lowercased alphanumeric runs; everything else separates.
std::vector<std::string> tokenize(std::string_view s);

// Jaccard similarity of two token sets. Both empty -> 1, one empty -> 0.
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

} // namespace cdt
