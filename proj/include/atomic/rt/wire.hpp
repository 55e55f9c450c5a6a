#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace atomic::rt::pb {

enum class WireType : std::uint8_t { varint = 0, fixed64 = 1, length_delimited = 2, fixed32 = 5 };

struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Appends protobuf wire-format fields to a byte string.
class Writer {
public:
  void varint(std::uint64_t v);
  void tag(std::uint32_t field, WireType wt);

  void uint64_field(std::uint32_t field, std::uint64_t v);
  /// Negative values take ten bytes (sign-extended), as protobuf int32 does.
  void int32_field(std::uint32_t field, std::int32_t v);
  void int64_field(std::uint32_t field, std::int64_t v);
  void uint32_field(std::uint32_t field, std::uint32_t v) { uint64_field(field, v); }
  void enum_field(std::uint32_t field, int v) { int32_field(field, v); }
  void float_field(std::uint32_t field, float v);
  void bytes_field(std::uint32_t field, std::string_view v);
  void message_field(std::uint32_t field, Writer const& m) { bytes_field(field, m.bytes()); }

  std::string const& bytes() const { return out_; }
  std::string take() { return std::move(out_); }

private:
  std::string out_;
};

/// Pull parser over one message. Unknown fields can be skipped with skip().
class Reader {
public:
  explicit Reader(std::string_view in) : in_{in} {}

  /// Reads the next tag; false at end of input.
  bool next();
  std::uint32_t field() const { return field_; }
  WireType wire_type() const { return wt_; }

  std::uint64_t read_varint();
  std::int32_t read_int32() { return static_cast<std::int32_t>(read_varint()); }
  std::int64_t read_int64() { return static_cast<std::int64_t>(read_varint()); }
  float read_float();
  std::string_view read_bytes();
  /// Skips the current field's value.
  void skip();

  /// Throws DecodeError unless the current field has wire type `wt`.
  void expect(WireType wt) const;

private:
  std::uint64_t raw_varint();

  std::string_view in_;
  std::size_t pos_{0};
  std::uint32_t field_{0};
  WireType wt_{WireType::varint};
};

}  // namespace atomic::rt::pb
