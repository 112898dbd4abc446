#pragma once

// Little-endian binary encoding helpers shared by the dataset and checkpoint
// formats. Reader errors carry the byte offset of the failed read.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace diul::binio {

class Writer {
 public:
  void bytes(std::string_view s) { buf_.append(s); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  /// u32 byte length followed by the UTF-8 bytes.
  void str(std::string_view s);

  const std::string& buffer() const noexcept { return buf_; }
  void save(const std::string& path) const;

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  static Reader from_file(const std::string& path);

  std::string_view bytes(std::size_t n);
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string str();

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  void expect_end() const;

 private:
  void need(std::size_t n) const;

  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace diul::binio
