#include "neurocap/pipeline/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"

namespace neurocap {
namespace {

constexpr std::string_view kDatabaseMagic = "NCFD";
constexpr std::uint32_t kDatabaseVersion = 1;

}  // namespace

FeatureDatabase::FeatureDatabase(std::vector<std::uint64_t> ids, Matrix features,
                                 std::vector<std::string> sources)
    : ids_(std::move(ids)), features_(std::move(features)), sources_(std::move(sources)) {
  if (ids_.size() != features_.rows()) {
    throw DataError("FeatureDatabase: " + std::to_string(ids_.size()) + " ids for " +
                    std::to_string(features_.rows()) + " feature rows");
  }
  if (!sources_.empty() && sources_.size() != ids_.size()) {
    throw DataError("FeatureDatabase: source list length does not match ids");
  }
  std::unordered_set<std::uint64_t> seen;
  for (std::uint64_t id : ids_) {
    if (!seen.insert(id).second) throw DataError("FeatureDatabase: duplicate id " + std::to_string(id));
  }
  require_finite(features_, "FeatureDatabase");
}

FeatureDatabase FeatureDatabase::from_matrix(Matrix features) {
  std::vector<std::uint64_t> ids(features.rows());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return FeatureDatabase(std::move(ids), std::move(features));
}

double mean_squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("mean_squared_distance: length mismatch");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

std::vector<Neighbor> retrieve_similar(std::span<const double> query, const FeatureDatabase& db,
                                       std::size_t k) {
  if (k < 1) throw ConfigError("retrieve_similar: k must be >= 1");
  if (db.size() == 0) throw DataError("retrieve_similar: database is empty");
  if (query.size() != db.dim()) {
    throw ShapeError("retrieve_similar: query has " + std::to_string(query.size()) +
                     " values, database vectors have " + std::to_string(db.dim()));
  }
  for (double v : query) {
    if (!std::isfinite(v)) throw NumericError("retrieve_similar: non-finite query value");
  }
  std::vector<Neighbor> all(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    all[i] = Neighbor{db.ids()[i], mean_squared_distance(query, db.features().row(i))};
  }
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    [](const Neighbor& a, const Neighbor& b) {
                      return a.mse != b.mse ? a.mse < b.mse : a.id < b.id;
                    });
  all.resize(keep);
  return all;
}

void save_feature_database(const std::filesystem::path& path, const FeatureDatabase& db) {
  ByteWriter w;
  w.raw(kDatabaseMagic);
  w.u32(kDatabaseVersion);
  w.u64(db.size());
  w.u64(db.dim());
  for (std::size_t i = 0; i < db.size(); ++i) {
    w.u64(db.ids()[i]);
    w.string(db.sources().empty() ? std::string_view{} : std::string_view(db.sources()[i]));
    w.matrix(db.features().row_block(i, 1));
  }
  write_file_atomic(path, w.bytes());
}

FeatureDatabase load_feature_database(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  ByteReader r(data, path.string());
  r.expect_magic(kDatabaseMagic);
  const std::uint32_t version = r.u32();
  if (version != kDatabaseVersion) r.fail("unsupported feature database version " + std::to_string(version));
  const std::uint64_t count = r.u64();
  const std::uint64_t dim = r.u64();
  if (count > data.size()) r.fail("record count exceeds file size");
  std::vector<std::uint64_t> ids;
  std::vector<std::string> sources;
  std::vector<double> values;
  bool any_source = false;
  for (std::uint64_t i = 0; i < count; ++i) {
    ids.push_back(r.u64());
    sources.push_back(r.string());
    any_source = any_source || !sources.back().empty();
    const std::size_t at = r.offset();
    const Matrix m = r.matrix();
    if (m.rows() != 1 || m.cols() != dim) {
      throw DataError(path.string() + ": record " + std::to_string(i) + " at byte offset " +
                      std::to_string(at) + " is " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + ", expected 1x" + std::to_string(dim));
    }
    values.insert(values.end(), m.values().begin(), m.values().end());
  }
  if (!r.at_end()) r.fail("trailing bytes after records");
  if (!any_source) sources.clear();
  return FeatureDatabase(std::move(ids),
                         Matrix(static_cast<std::size_t>(count), static_cast<std::size_t>(dim),
                                std::move(values)),
                         std::move(sources));
}

}  // namespace neurocap
