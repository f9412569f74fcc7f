#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace pdm::csv {

/// Reads one RFC 4180 record (quoted fields may span lines). Returns false
/// at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields);

/// Quotes the field when it contains a delimiter, quote or line break.
std::string escape(std::string_view field);

void write_record(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace pdm::csv
