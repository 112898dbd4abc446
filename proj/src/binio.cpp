#include "diul/binio.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "diul/error.hpp"

namespace diul::binio {

namespace {

template <class U>
void put_le(std::string& buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

template <class U>
U get_le(std::string_view s) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(static_cast<unsigned char>(s[i])) << (8 * i);
  return v;
}

}  // namespace

void Writer::u16(std::uint16_t v) { put_le(buf_, v); }
void Writer::u32(std::uint32_t v) { put_le(buf_, v); }
void Writer::u64(std::uint64_t v) { put_le(buf_, v); }
void Writer::f32(float v) { put_le(buf_, std::bit_cast<std::uint32_t>(v)); }
void Writer::f64(double v) { put_le(buf_, std::bit_cast<std::uint64_t>(v)); }

void Writer::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s);
}

void Writer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  if (!out) throw Error("short write to '" + path + "'");
}

Reader Reader::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return Reader(ss.str());
}

void Reader::need(std::size_t n) const {
  if (n > remaining())
    throw FormatError("truncated file: needed " + std::to_string(n) + " bytes, " +
                          std::to_string(remaining()) + " left",
                      pos_);
}

std::string_view Reader::bytes(std::size_t n) {
  need(n);
  std::string_view s(data_.data() + pos_, n);
  pos_ += n;
  return s;
}

std::uint16_t Reader::u16() { return get_le<std::uint16_t>(bytes(2)); }
std::uint32_t Reader::u32() { return get_le<std::uint32_t>(bytes(4)); }
std::uint64_t Reader::u64() { return get_le<std::uint64_t>(bytes(8)); }
float Reader::f32() { return std::bit_cast<float>(u32()); }
double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string Reader::str() {
  const std::uint32_t n = u32();
  return std::string(bytes(n));
}

void Reader::expect_end() const {
  if (remaining() != 0)
    throw FormatError(std::to_string(remaining()) + " trailing bytes after payload", pos_);
}

}  // namespace diul::binio
