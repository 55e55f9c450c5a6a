#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace atomic::gtfs {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using CsvRow = std::vector<std::string>;

/// RFC 4180 records. Accepts LF or CRLF, a leading UTF-8 BOM, and a missing
/// final newline. Blank lines are skipped. Throws CsvError on an unterminated
/// quote or stray characters after a closing quote.
std::vector<CsvRow> parse_csv(std::string_view text);

/// Quotes only fields containing a comma, quote, CR or LF. LF line endings.
std::string write_csv(std::vector<CsvRow> const& rows);

}  // namespace atomic::gtfs
