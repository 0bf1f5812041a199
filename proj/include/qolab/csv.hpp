#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qolab::csv {

/// Splits RFC 4180 text into records. Fields may be double-quoted; a quote
/// inside a quoted field is written as two quotes. Accepts LF or CRLF line
/// endings. A trailing newline does not produce an empty record.
std::vector<std::vector<std::string>> parse(std::string_view text);

std::string escape_field(std::string_view field);

}  // namespace qolab::csv
