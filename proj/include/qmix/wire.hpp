#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "qmix/errors.hpp"
#include "qmix/types.hpp"

namespace qmix::wire {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

using Bytes = std::vector<std::uint8_t>;

template <class T>
void put(Bytes& out, T v) {
  const auto at = out.size();
  out.resize(at + sizeof(T));
  std::memcpy(out.data() + at, &v, sizeof(T));
}

inline void put_bytes(Bytes& out, const void* data, std::size_t len) {
  const auto at = out.size();
  out.resize(at + len);
  std::memcpy(out.data() + at, data, len);
}

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}
  explicit Reader(const Bytes& b) : Reader(b.data(), b.size()) {}

  template <class T>
  T get() {
    if (at_ + sizeof(T) > len_) throw FramingError("truncated frame");
    T v;
    std::memcpy(&v, data_ + at_, sizeof(T));
    at_ += sizeof(T);
    return v;
  }

  void get_bytes(void* dst, std::size_t len) {
    if (at_ + len > len_) throw FramingError("truncated frame");
    std::memcpy(dst, data_ + at_, len);
    at_ += len;
  }

  void skip(std::size_t len) {
    if (at_ + len > len_) throw FramingError("truncated frame");
    at_ += len;
  }

  std::size_t remaining() const { return len_ - at_; }
  std::size_t position() const { return at_; }

 private:
  const std::uint8_t* data_;
  std::size_t len_;
  std::size_t at_ = 0;
};

std::uint32_t crc32(const std::uint8_t* data, std::size_t len);
inline std::uint32_t crc32(const Bytes& b) { return crc32(b.data(), b.size()); }

// Row-major (re, im) f64 pairs.
void put_cmat(Bytes& out, const CMat& m);
CMat get_cmat(Reader& r, Index rows, Index cols);
void put_cvec(Bytes& out, const CVec& v);
CVec get_cvec(Reader& r, Index n);
void put_rvec(Bytes& out, const RVec& v);
RVec get_rvec(Reader& r, Index n);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, const Bytes& bytes);

}  // namespace qmix::wire
