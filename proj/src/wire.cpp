#include "qmix/wire.hpp"

#include <fstream>

#include <zlib.h>

namespace qmix::wire {

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
  return static_cast<std::uint32_t>(::crc32(0L, data, static_cast<uInt>(len)));
}

void put_cmat(Bytes& out, const CMat& m) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) {
      put<double>(out, m(r, c).real());
      put<double>(out, m(r, c).imag());
    }
}

CMat get_cmat(Reader& rd, Index rows, Index cols) {
  CMat m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      const double re = rd.get<double>();
      const double im = rd.get<double>();
      m(r, c) = Complex{re, im};
    }
  return m;
}

void put_cvec(Bytes& out, const CVec& v) {
  for (Index i = 0; i < v.size(); ++i) {
    put<double>(out, v(i).real());
    put<double>(out, v(i).imag());
  }
}

CVec get_cvec(Reader& rd, Index n) {
  CVec v(n);
  for (Index i = 0; i < n; ++i) {
    const double re = rd.get<double>();
    const double im = rd.get<double>();
    v(i) = Complex{re, im};
  }
  return v;
}

void put_rvec(Bytes& out, const RVec& v) {
  for (Index i = 0; i < v.size(); ++i) put<double>(out, v(i));
}

RVec get_rvec(Reader& rd, Index n) {
  RVec v(n);
  for (Index i = 0; i < n; ++i) v(i) = rd.get<double>();
  return v;
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

}  // namespace qmix::wire
