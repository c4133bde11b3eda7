#include "tdrom/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "tdrom/error.hpp"

namespace tdrom::binio {

void Writer::bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

void Writer::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::f64s(std::span<const double> v) {
  buf_.reserve(buf_.size() + 8 * v.size());
  for (double x : v) f64(x);
}

void Writer::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  os.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
  if (!os) throw FormatError("short write to '" + path + "'");
}

Reader::Reader(std::vector<std::uint8_t> data, std::string format)
    : data_(std::move(data)), format_(std::move(format)) {}

Reader Reader::open(const std::string& path, std::string format) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(format + ": cannot open '" + path + "'");
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return Reader(std::move(data), std::move(format));
}

void Reader::need(std::size_t n, const char* what) const {
  if (remaining() < n)
    throw FormatError(format_ + ": truncated file while reading " + what + " (need " +
                      std::to_string(n) + " bytes, have " + std::to_string(remaining()) + ")");
}

void Reader::expect_magic(std::string_view magic) {
  if (remaining() < magic.size() ||
      std::string_view(reinterpret_cast<const char*>(data_.data() + pos_), magic.size()) != magic)
    throw FormatError(format_ + ": bad magic (expected \"" + std::string(magic) + "\")");
  pos_ += magic.size();
}

std::string Reader::bytes(std::size_t n, const char* what) {
  need(n, what);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::uint32_t Reader::u32(const char* what) {
  need(4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t Reader::u64(const char* what) {
  need(8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

double Reader::f64(const char* what) { return std::bit_cast<double>(u64(what)); }

std::vector<double> Reader::f64s(std::size_t n, const char* what) {
  if (n > remaining() / 8) need(n * 8, what);
  std::vector<double> v(n);
  for (auto& x : v) x = f64(what);
  return v;
}

void Reader::expect_end() const {
  if (remaining() != 0)
    throw FormatError(format_ + ": payload length mismatch, " + std::to_string(remaining()) +
                      " trailing bytes after declared content");
}

}  // namespace tdrom::binio
