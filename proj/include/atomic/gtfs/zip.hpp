#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace atomic::gtfs {

struct ZipError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZipArchive {
  std::vector<std::pair<std::string, std::string>> members;  // name, content
  std::string comment;

  /// nullptr when absent.
  std::string const* find(std::string_view name) const;
};

/// Reads stored and deflated members; verifies CRC-32. No ZIP64, no
/// encryption. Directory entries are skipped. Member names match GTFS files
/// both at the archive root and inside a single top-level folder.
ZipArchive read_zip(std::string_view bytes);

/// Deflates every member. Timestamps are fixed at 1980-01-01 so the same
/// archive always produces the same bytes.
std::string write_zip(ZipArchive const& archive);

}  // namespace atomic::gtfs
