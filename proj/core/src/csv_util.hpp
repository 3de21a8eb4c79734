#pragma once

// Internal CSV helpers shared by the I/O paths. Not installed.

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace pbfrec::csv {

// Splits one CSV line on commas. No quoting support; the toolkit's files are
// plain numeric tables.
std::vector<std::string_view> split_fields(std::string_view line);

// Strips surrounding spaces/CR.
std::string_view trim(std::string_view s);

// Parses a finite double. Returns false on garbage, NaN or Inf.
bool parse_double(std::string_view field, double& out);

bool parse_uint64(std::string_view field, std::uint64_t& out);

// Formats a double so that a reload reproduces the value exactly.
std::string format_double(double v);

}  // namespace pbfrec::csv
