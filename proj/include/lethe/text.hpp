#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lethe {

// ASCII-only lowercasing; bytes outside A-Z pass through.
std::string ascii_lower(std::string_view s);

// Case-insensitive (ASCII) substring test; empty needle never matches.
bool contains_casefold(std::string_view haystack, std::string_view needle);

// Whitespace-separated tokens, casefolded.
std::vector<std::string> whitespace_tokens(std::string_view s);

}  // namespace lethe
