#include "atomic/gtfs/zip.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <limits>

namespace atomic::gtfs {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01
constexpr std::uint16_t kUtf8Names = 0x0800;

class Reader {
public:
  explicit Reader(std::string_view bytes) : bytes_{bytes} {}

  std::uint16_t u16(std::size_t at) const {
    need(at, 2);
    return static_cast<std::uint16_t>(byte(at) | byte(at + 1) << 8);
  }

  std::uint32_t u32(std::size_t at) const {
    need(at, 4);
    return static_cast<std::uint32_t>(byte(at)) | static_cast<std::uint32_t>(byte(at + 1)) << 8 |
           static_cast<std::uint32_t>(byte(at + 2)) << 16 | static_cast<std::uint32_t>(byte(at + 3)) << 24;
  }

  std::string_view slice(std::size_t at, std::size_t n) const {
    need(at, n);
    return bytes_.substr(at, n);
  }

  std::size_t size() const { return bytes_.size(); }

private:
  unsigned byte(std::size_t at) const { return static_cast<unsigned char>(bytes_[at]); }

  void need(std::size_t at, std::size_t n) const {
    if (at > bytes_.size() || n > bytes_.size() - at) {
      throw ZipError{"truncated zip archive"};
    }
  }

  std::string_view bytes_;
};

std::uint32_t crc(std::string_view data) {
  auto c = crc32(0L, Z_NULL, 0);
  // crc32 takes uInt lengths; feed large inputs in chunks.
  while (!data.empty()) {
    auto const n = std::min<std::size_t>(data.size(), std::numeric_limits<uInt>::max());
    c = crc32(c, reinterpret_cast<Bytef const*>(data.data()), static_cast<uInt>(n));
    data.remove_prefix(n);
  }
  return static_cast<std::uint32_t>(c);
}

std::string inflate_raw(std::string_view in, std::size_t expected) {
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
    throw ZipError{"inflateInit2 failed"};
  }
  std::string out(expected, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  auto const rc = inflate(&zs, Z_FINISH);
  auto const produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) {
    throw ZipError{"corrupt deflate stream"};
  }
  return out;
}

std::string deflate_raw(std::string_view in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw ZipError{"deflateInit2 failed"};
  }
  std::string out(deflateBound(&zs, static_cast<uLong>(in.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  auto const rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) {
    throw ZipError{"deflate failed"};
  }
  return out;
}

void put16(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put32(std::string& out, std::uint32_t v) {
  put16(out, v & 0xffff);
  put16(out, v >> 16);
}

std::size_t find_end_record(Reader const& r) {
  if (r.size() < 22) {
    throw ZipError{"not a zip archive"};
  }
  auto const lowest = r.size() > 22 + 0xffff ? r.size() - 22 - 0xffff : 0;
  for (auto at = r.size() - 22;; --at) {
    if (r.u32(at) == kEndSig && at + 22 + r.u16(at + 20) == r.size()) {
      return at;
    }
    if (at == lowest) {
      break;
    }
  }
  throw ZipError{"end of central directory not found"};
}

/// Strips one leading folder when every member lives under it.
void strip_common_folder(ZipArchive& a) {
  if (a.members.empty()) {
    return;
  }
  auto const slash = a.members.front().first.find('/');
  if (slash == std::string::npos) {
    return;
  }
  auto const prefix = a.members.front().first.substr(0, slash + 1);
  for (auto const& [name, _] : a.members) {
    if (!name.starts_with(prefix) || name.find('/', prefix.size()) != std::string::npos) {
      return;
    }
  }
  for (auto& [name, _] : a.members) {
    name.erase(0, prefix.size());
  }
}

}  // namespace

std::string const* ZipArchive::find(std::string_view name) const {
  auto const it = std::find_if(begin(members), end(members), [&](auto const& m) { return m.first == name; });
  return it == end(members) ? nullptr : &it->second;
}

ZipArchive read_zip(std::string_view bytes) {
  Reader const r{bytes};
  auto const eocd = find_end_record(r);
  auto const count = r.u16(eocd + 10);
  auto at = std::size_t{r.u32(eocd + 16)};

  ZipArchive out;
  out.comment = std::string{r.slice(eocd + 22, r.u16(eocd + 20))};
  for (auto i = 0U; i < count; ++i) {
    if (r.u32(at) != kCentralSig) {
      throw ZipError{"bad central directory entry"};
    }
    auto const flags = r.u16(at + 8);
    auto const method = r.u16(at + 10);
    auto const expected_crc = r.u32(at + 16);
    auto const packed = r.u32(at + 20);
    auto const size = r.u32(at + 24);
    auto const name_len = r.u16(at + 28);
    auto const extra_len = r.u16(at + 30);
    auto const comment_len = r.u16(at + 32);
    auto const local = std::size_t{r.u32(at + 42)};
    auto name = std::string{r.slice(at + 46, name_len)};
    at += 46 + name_len + extra_len + comment_len;

    if (name.ends_with('/')) {
      continue;
    }
    if ((flags & 0x1) != 0) {
      throw ZipError{"encrypted member " + name};
    }
    if (r.u32(local) != kLocalSig) {
      throw ZipError{"bad local header for " + name};
    }
    auto const data_at = local + 30 + r.u16(local + 26) + r.u16(local + 28);
    auto const raw = r.slice(data_at, packed);
    std::string content;
    if (method == 0) {
      if (packed != size) {
        throw ZipError{"stored member size mismatch for " + name};
      }
      content = std::string{raw};
    } else if (method == 8) {
      content = inflate_raw(raw, size);
    } else {
      throw ZipError{"unsupported compression method " + std::to_string(method) + " for " + name};
    }
    if (crc(content) != expected_crc) {
      throw ZipError{"CRC mismatch for " + name};
    }
    out.members.emplace_back(std::move(name), std::move(content));
  }
  strip_common_folder(out);
  return out;
}

std::string write_zip(ZipArchive const& archive) {
  if (archive.members.size() > 0xffff || archive.comment.size() > 0xffff) {
    throw ZipError{"archive too large"};
  }
  std::string out;
  std::string central;
  for (auto const& [name, content] : archive.members) {
    if (name.size() > 0xffff || content.size() > 0xffffffffU) {
      throw ZipError{"member too large: " + name};
    }
    auto const packed = deflate_raw(content);
    auto const sum = crc(content);
    auto const offset = static_cast<std::uint32_t>(out.size());

    put32(out, kLocalSig);
    put16(out, 20);
    put16(out, kUtf8Names);
    put16(out, 8);
    put16(out, 0);
    put16(out, kDosDate);
    put32(out, sum);
    put32(out, static_cast<std::uint32_t>(packed.size()));
    put32(out, static_cast<std::uint32_t>(content.size()));
    put16(out, static_cast<std::uint32_t>(name.size()));
    put16(out, 0);
    out += name;
    out += packed;

    put32(central, kCentralSig);
    put16(central, 20);
    put16(central, 20);
    put16(central, kUtf8Names);
    put16(central, 8);
    put16(central, 0);
    put16(central, kDosDate);
    put32(central, sum);
    put32(central, static_cast<std::uint32_t>(packed.size()));
    put32(central, static_cast<std::uint32_t>(content.size()));
    put16(central, static_cast<std::uint32_t>(name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += name;
  }
  auto const central_at = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint32_t>(archive.members.size()));
  put16(out, static_cast<std::uint32_t>(archive.members.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, central_at);
  put16(out, static_cast<std::uint32_t>(archive.comment.size()));
  out += archive.comment;
  return out;
}

}  // namespace atomic::gtfs
