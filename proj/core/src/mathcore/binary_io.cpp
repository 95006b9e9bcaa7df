#include "neurocap/mathcore/binary_io.hpp"

#include <bit>
#include <fstream>
#include <limits>
#include <system_error>

#include "neurocap/errors.hpp"

namespace neurocap {
namespace {

template <class T>
void put_le(std::string& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>(static_cast<unsigned char>(v >> (8 * i))));
  }
}

template <class T>
T get_le(const char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return v;
}

}  // namespace

void ByteWriter::u32(std::uint32_t v) { put_le(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { put_le(buf_, v); }
void ByteWriter::f64(double v) { put_le(buf_, std::bit_cast<std::uint64_t>(v)); }
void ByteWriter::raw(std::string_view bytes) { buf_.append(bytes); }

void ByteWriter::string(std::string_view s) {
  u64(s.size());
  raw(s);
}

void ByteWriter::matrix(const Matrix& m) {
  raw(kMatrixMagic);
  u32(kMatrixVersion);
  u64(m.rows());
  u64(m.cols());
  for (double v : m.values()) f64(v);
}

ByteReader::ByteReader(std::string_view data, std::string source)
    : data_(data), source_(std::move(source)) {}

void ByteReader::fail(const std::string& what) const {
  throw DataError(source_ + ": " + what + " at byte offset " + std::to_string(pos_));
}

void ByteReader::need(std::size_t n) {
  if (data_.size() - pos_ < n) {
    fail("truncated input (needed " + std::to_string(n) + " bytes, " +
         std::to_string(data_.size() - pos_) + " available)");
  }
}

std::uint32_t ByteReader::u32() {
  need(4);
  auto v = get_le<std::uint32_t>(data_.data() + pos_);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  auto v = get_le<std::uint64_t>(data_.data() + pos_);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string_view ByteReader::raw(std::size_t n) {
  need(n);
  auto v = data_.substr(pos_, n);
  pos_ += n;
  return v;
}

std::string ByteReader::string() {
  const std::uint64_t n = u64();
  if (n > data_.size() - pos_) fail("string length " + std::to_string(n) + " exceeds input");
  return std::string(raw(static_cast<std::size_t>(n)));
}

void ByteReader::expect_magic(std::string_view magic) {
  need(magic.size());
  if (data_.substr(pos_, magic.size()) != magic) {
    fail("bad magic, expected \"" + std::string(magic) + "\"");
  }
  pos_ += magic.size();
}

Matrix ByteReader::matrix() {
  expect_magic(kMatrixMagic);
  const std::uint32_t version = u32();
  if (version != kMatrixVersion) {
    fail("unsupported matrix version " + std::to_string(version));
  }
  const std::uint64_t rows = u64();
  const std::uint64_t cols = u64();
  const std::size_t remaining = data_.size() - pos_;
  if (cols != 0 && rows > remaining / 8 / cols) {
    fail("truncated matrix payload for " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<double> values(static_cast<std::size_t>(rows * cols));
  for (double& v : values) v = f64();
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(values));
  if (!m.all_finite()) fail("non-finite value in matrix payload");
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("error reading " + path.string());
  return data;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("error writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot rename into " + path.string());
  }
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  require_finite(m, "save_matrix");
  ByteWriter w;
  w.matrix(m);
  write_file_atomic(path, w.bytes());
}

Matrix load_matrix(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  ByteReader r(data, path.string());
  Matrix m = r.matrix();
  if (!r.at_end()) r.fail("trailing bytes after matrix");
  return m;
}

}  // namespace neurocap
