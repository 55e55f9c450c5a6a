#include "atomic/common/io.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace atomic {

namespace fs = std::filesystem;

std::string read_file(fs::path const& path) {
  std::ifstream in{path, std::ios::binary};
  if (!in) {
    throw IoError{"cannot open " + path.string()};
  }
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) {
    throw IoError{"cannot read " + path.string()};
  }
  return out.str();
}

void write_file_atomic(fs::path const& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(std::random_device{}());
  {
    std::ofstream out{tmp, std::ios::binary | std::ios::trunc};
    if (!out) {
      throw IoError{"cannot create " + tmp.string()};
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError{"cannot write " + tmp.string()};
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError{"cannot rename into " + path.string()};
  }
}

}  // namespace atomic
