#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tdrom::binio {

/// Little-endian byte sink; flushed to disk with save().
class Writer {
 public:
  void bytes(std::string_view s);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64s(std::span<const double> v);
  const std::vector<std::uint8_t>& buffer() const { return buf_; }
  void save(const std::string& path) const;

 private:
  std::vector<std::uint8_t> buf_;
};

/// Little-endian cursor over a whole file. Every read checks the remaining
/// length and throws FormatError naming `what` and the format tag.
class Reader {
 public:
  Reader(std::vector<std::uint8_t> data, std::string format);
  static Reader open(const std::string& path, std::string format);

  /// Consumes the magic string or throws "bad magic".
  void expect_magic(std::string_view magic);
  std::string bytes(std::size_t n, const char* what);
  std::uint32_t u32(const char* what);
  std::uint64_t u64(const char* what);
  double f64(const char* what);
  std::vector<double> f64s(std::size_t n, const char* what);

  std::size_t remaining() const { return data_.size() - pos_; }
  /// Throws unless the whole payload has been consumed.
  void expect_end() const;
  const std::string& format() const { return format_; }

 private:
  void need(std::size_t n, const char* what) const;

  std::vector<std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string format_;
};

}  // namespace tdrom::binio
