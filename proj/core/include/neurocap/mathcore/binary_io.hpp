#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "neurocap/mathcore/matrix.hpp"

namespace neurocap {

/// Matrix block layout: "NCMX", u32 version, u64 rows, u64 cols, then
/// rows*cols little-endian f64 values in row-major order.
inline constexpr std::string_view kMatrixMagic = "NCMX";
inline constexpr std::uint32_t kMatrixVersion = 1;

/// Little-endian binary encoder into an in-memory buffer.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void raw(std::string_view bytes);
  /// u64 length followed by the bytes.
  void string(std::string_view s);
  void matrix(const Matrix& m);

  const std::string& bytes() const noexcept { return buf_; }
  std::string take() && { return std::move(buf_); }

 private:
  std::string buf_;
};

/// Little-endian decoder over a byte buffer. Every read past the end throws
/// DataError naming the source and the byte offset where data ran out.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string source);

  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string_view raw(std::size_t n);
  std::string string();
  Matrix matrix();
  /// Consumes `magic` or throws DataError.
  void expect_magic(std::string_view magic);

  std::size_t offset() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == data_.size(); }
  const std::string& source() const noexcept { return source_; }
  /// DataError carrying the source name and current offset.
  [[noreturn]] void fail(const std::string& what) const;

 private:
  void need(std::size_t n);

  std::string_view data_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace neurocap
