// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// Explicit little-endian encoding for the binary dataset and checkpoint
// formats, independent of host byte order.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <type_traits>

#include "gmmflow/error.hpp"

namespace gmmflow {

namespace detail {

template <typename T>
using LeBits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

}  // namespace detail

template <typename T>
void put_le(std::string& buf, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  const auto bits = std::bit_cast<detail::LeBits<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xffU));
}

/// Bounds-checked cursor over a byte buffer. Reading past the end throws
/// kFormat naming the source.
class ByteReader {
 public:
  ByteReader(const std::string& buf, std::string source) : buf_(buf), source_(std::move(source)) {}

  template <typename T>
  T get() {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    need(sizeof(T));
    detail::LeBits<T> bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bits |= static_cast<detail::LeBits<T>>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::string get_bytes(std::uint64_t n) {
    need(n);
    std::string out = buf_.substr(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return out;
  }

  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

  bool at_end() const { return pos_ == buf_.size(); }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  void need(std::uint64_t n) const {
    if (n > buf_.size() - pos_) fail(ErrorKind::kFormat, "'" + source_ + "' is truncated");
  }

  const std::string& buf_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace gmmflow
