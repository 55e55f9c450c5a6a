#include "atomic/rt/wire.hpp"

#include <bit>
#include <cstring>

namespace atomic::rt::pb {

void Writer::varint(std::uint64_t v) {
  while (v >= 0x80) {
    out_.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  out_.push_back(static_cast<char>(v));
}

void Writer::tag(std::uint32_t field, WireType wt) {
  varint((static_cast<std::uint64_t>(field) << 3) | static_cast<std::uint8_t>(wt));
}

void Writer::uint64_field(std::uint32_t field, std::uint64_t v) {
  tag(field, WireType::varint);
  varint(v);
}

void Writer::int32_field(std::uint32_t field, std::int32_t v) {
  tag(field, WireType::varint);
  varint(static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
}

void Writer::int64_field(std::uint32_t field, std::int64_t v) {
  tag(field, WireType::varint);
  varint(static_cast<std::uint64_t>(v));
}

void Writer::float_field(std::uint32_t field, float v) {
  tag(field, WireType::fixed32);
  auto const bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) {
    out_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

void Writer::bytes_field(std::uint32_t field, std::string_view v) {
  tag(field, WireType::length_delimited);
  varint(v.size());
  out_.append(v);
}

std::uint64_t Reader::raw_varint() {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (pos_ >= in_.size()) {
      throw DecodeError{"truncated varint"};
    }
    auto const b = static_cast<std::uint8_t>(in_[pos_++]);
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if ((b & 0x80) == 0) {
      return v;
    }
  }
  throw DecodeError{"varint longer than ten bytes"};
}

bool Reader::next() {
  if (pos_ >= in_.size()) {
    return false;
  }
  auto const key = raw_varint();
  field_ = static_cast<std::uint32_t>(key >> 3);
  auto const wt = key & 0x7;
  if (field_ == 0) {
    throw DecodeError{"field number 0"};
  }
  if (wt != 0 && wt != 1 && wt != 2 && wt != 5) {
    throw DecodeError{"unsupported wire type " + std::to_string(wt)};
  }
  wt_ = static_cast<WireType>(wt);
  return true;
}

void Reader::expect(WireType wt) const {
  if (wt_ != wt) {
    throw DecodeError{"field " + std::to_string(field_) + " has wire type " +
                      std::to_string(static_cast<int>(wt_)) + ", expected " + std::to_string(static_cast<int>(wt))};
  }
}

std::uint64_t Reader::read_varint() {
  expect(WireType::varint);
  return raw_varint();
}

float Reader::read_float() {
  expect(WireType::fixed32);
  if (in_.size() - pos_ < 4) {
    throw DecodeError{"truncated fixed32"};
  }
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(in_[pos_ + i])) << (8 * i);
  }
  pos_ += 4;
  return std::bit_cast<float>(bits);
}

std::string_view Reader::read_bytes() {
  expect(WireType::length_delimited);
  auto const n = raw_varint();
  if (n > in_.size() - pos_) {
    throw DecodeError{"truncated length-delimited field"};
  }
  auto const out = in_.substr(pos_, n);
  pos_ += n;
  return out;
}

void Reader::skip() {
  switch (wt_) {
    case WireType::varint: raw_varint(); break;
    case WireType::fixed64:
      if (in_.size() - pos_ < 8) {
        throw DecodeError{"truncated fixed64"};
      }
      pos_ += 8;
      break;
    case WireType::length_delimited: read_bytes(); break;
    case WireType::fixed32:
      if (in_.size() - pos_ < 4) {
        throw DecodeError{"truncated fixed32"};
      }
      pos_ += 4;
      break;
  }
}

}  // namespace atomic::rt::pb
