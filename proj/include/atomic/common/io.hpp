#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace atomic {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(std::filesystem::path const& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partial file. On failure nothing is left behind.
void write_file_atomic(std::filesystem::path const& path, std::string_view bytes);

}  // namespace atomic
