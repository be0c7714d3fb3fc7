#pragma once

// Little-endian primitive readers/writers shared by the dataset and
// checkpoint containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "dceformer/error.hpp"

namespace dceformer::io {

static_assert(std::endian::native == std::endian::little,
              "containers are written by memcpy and assume a little-endian host");

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u8(uint8_t v) { bytes(&v, 1); }
  void u32(uint32_t v) { bytes(&v, 4); }
  void u64(uint64_t v) { bytes(&v, 8); }
  void i64(int64_t v) { bytes(&v, 8); }
  void f32(float v) { bytes(&v, 4); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f32s(const std::vector<float>& v) { bytes(v.data(), v.size() * sizeof(float)); }
  void u8s(const std::vector<uint8_t>& v) { bytes(v.data(), v.size()); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  void bytes(void* p, size_t n, const std::string& ctx) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n)
      throw Error("'" + source_ + "' truncated in " + ctx);
  }
  uint8_t u8(const std::string& ctx) { return read<uint8_t>(ctx); }
  uint32_t u32(const std::string& ctx) { return read<uint32_t>(ctx); }
  uint64_t u64(const std::string& ctx) { return read<uint64_t>(ctx); }
  int64_t i64(const std::string& ctx) { return read<int64_t>(ctx); }
  float f32(const std::string& ctx) { return read<float>(ctx); }

  std::string str(const std::string& ctx, uint32_t max_len = 1u << 20) {
    const uint32_t n = u32(ctx);
    if (n > max_len) throw Error("'" + source_ + "' has an implausible string length in " + ctx);
    std::string s(n, '\0');
    bytes(s.data(), n, ctx);
    return s;
  }
  std::vector<float> f32s(size_t n, const std::string& ctx) {
    std::vector<float> v(n);
    bytes(v.data(), n * sizeof(float), ctx);
    return v;
  }
  std::vector<uint8_t> u8s(size_t n, const std::string& ctx) {
    std::vector<uint8_t> v(n);
    bytes(v.data(), n, ctx);
    return v;
  }

 private:
  template <typename T>
  T read(const std::string& ctx) {
    T v{};
    bytes(&v, sizeof(T), ctx);
    return v;
  }

  std::istream& in_;
  std::string source_;
};

}  // namespace dceformer::io
