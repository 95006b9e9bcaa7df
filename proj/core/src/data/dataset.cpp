#include "neurocap/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"
#include "neurocap/rng.hpp"

namespace neurocap {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kDatasetFormat = "neurocap-dataset";
constexpr std::uint32_t kDatasetVersion = 1;

std::vector<std::size_t> permuted_rows(std::span<const std::size_t> rows, std::uint64_t seed) {
  std::vector<std::size_t> order(rows.begin(), rows.end());
  Rng rng = make_stream(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::size_t train_count(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("split: train fraction must lie in (0, 1), got " + std::to_string(fraction));
  }
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

Json parse_json(std::string_view text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(source + ": " + e.what());
  }
}

template <typename T>
T json_field(const Json& j, const char* key, const std::string& source) {
  if (!j.is_object() || !j.contains(key)) throw DataError(source + ": missing field \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(source + ": field \"" + key + "\" has the wrong type");
  }
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::unlabeled: return "unlabeled";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  if (s == "unlabeled") return Split::unlabeled;
  throw DataError("unknown split label \"" + std::string(s) + "\"");
}

void PairedDataset::validate() const {
  const std::size_t n = ids.size();
  if (brain.rows() != n || features.rows() != n) {
    throw DataError("dataset: " + std::to_string(n) + " ids but " + std::to_string(brain.rows()) +
                    " brain rows and " + std::to_string(features.rows()) + " feature rows");
  }
  if (captions.size() != n || splits.size() != n) {
    throw DataError("dataset: caption or split list does not match the id count");
  }
  if (n > 0 && (brain.cols() == 0 || features.cols() == 0)) {
    throw DataError("dataset: brain and feature dims must be >= 1");
  }
  std::unordered_set<std::uint64_t> seen;
  for (std::uint64_t id : ids) {
    if (!seen.insert(id).second) throw DataError("dataset: duplicate id " + std::to_string(id));
  }
  if (!brain.all_finite() || !features.all_finite()) {
    throw DataError("dataset: non-finite value in brain or feature matrix");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (captions[i] && captions[i]->empty()) {
      throw DataError("dataset: empty caption for id " + std::to_string(ids[i]));
    }
  }
}

std::vector<std::size_t> PairedDataset::rows_in(Split s) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == s) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> PairedDataset::captioned_rows(Split s) const {
  std::vector<std::size_t> rows;
  for (std::size_t i : rows_in(s)) {
    if (captions[i]) rows.push_back(i);
  }
  return rows;
}

PairedDataset PairedDataset::subset(std::span<const std::size_t> rows) const {
  PairedDataset out;
  out.brain = brain.select_rows(rows);
  out.features = features.select_rows(rows);
  out.provenance = provenance;
  out.seed = seed;
  for (std::size_t r : rows) {
    out.ids.push_back(ids.at(r));
    out.captions.push_back(captions.at(r));
    out.splits.push_back(splits.at(r));
  }
  return out;
}

std::pair<PairedDataset, PairedDataset> split(const PairedDataset& ds, double train_fraction,
                                              std::uint64_t seed) {
  const std::size_t n_train = train_count(ds.size(), train_fraction);
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> order = permuted_rows(all, seed);
  std::vector<std::size_t> train_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test_rows(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  PairedDataset train = ds.subset(train_rows);
  PairedDataset test = ds.subset(test_rows);
  std::fill(train.splits.begin(), train.splits.end(), Split::train);
  std::fill(test.splits.begin(), test.splits.end(), Split::test);
  return {std::move(train), std::move(test)};
}

void assign_split(PairedDataset& ds, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.splits.at(i) != Split::unlabeled) labeled.push_back(i);
  }
  const std::size_t n_train = train_count(labeled.size(), train_fraction);
  const std::vector<std::size_t> order = permuted_rows(labeled, seed);
  for (std::size_t k = 0; k < order.size(); ++k) {
    ds.splits[order[k]] = k < n_train ? Split::train : Split::test;
  }
}

void save_dataset(const PairedDataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir);

  std::string captions;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.captions[i]) continue;
    Json line;
    line["id"] = ds.ids[i];
    line["feature_ref"] = i;
    line["tokens"] = *ds.captions[i];
    captions += line.dump() + "\n";
  }

  Json meta;
  meta["format"] = kDatasetFormat;
  meta["version"] = kDatasetVersion;
  meta["provenance"] = ds.provenance;
  meta["seed"] = ds.seed ? Json(*ds.seed) : Json(nullptr);
  meta["count"] = ds.size();
  meta["brain_dim"] = ds.brain_dim();
  meta["feature_dim"] = ds.feature_dim();
  meta["ids"] = ds.ids;
  Json labels = Json::array();
  for (Split s : ds.splits) labels.push_back(to_string(s));
  meta["split"] = std::move(labels);

  save_matrix(dir / "brain.ncmx", ds.brain);
  save_matrix(dir / "features.ncmx", ds.features);
  write_file_atomic(dir / "captions.jsonl", captions);
  write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

PairedDataset load_dataset(const std::filesystem::path& dir) {
  const std::string meta_src = (dir / "meta.json").string();
  const Json meta = parse_json(read_file(dir / "meta.json"), meta_src);
  if (json_field<std::string>(meta, "format", meta_src) != kDatasetFormat) {
    throw DataError(meta_src + ": not a dataset description");
  }
  const auto version = json_field<std::uint32_t>(meta, "version", meta_src);
  if (version != kDatasetVersion) {
    throw DataError(meta_src + ": unsupported dataset version " + std::to_string(version));
  }

  PairedDataset ds;
  ds.provenance = json_field<std::string>(meta, "provenance", meta_src);
  if (meta.contains("seed") && !meta["seed"].is_null()) {
    ds.seed = json_field<std::uint64_t>(meta, "seed", meta_src);
  }
  const auto count = json_field<std::size_t>(meta, "count", meta_src);
  const auto brain_dim = json_field<std::size_t>(meta, "brain_dim", meta_src);
  const auto feature_dim = json_field<std::size_t>(meta, "feature_dim", meta_src);
  ds.ids = json_field<std::vector<std::uint64_t>>(meta, "ids", meta_src);
  for (const std::string& s : json_field<std::vector<std::string>>(meta, "split", meta_src)) {
    ds.splits.push_back(parse_split(s));
  }
  if (ds.ids.size() != count || ds.splits.size() != count) {
    throw DataError(meta_src + ": id or split list length differs from count " + std::to_string(count));
  }

  ds.brain = load_matrix(dir / "brain.ncmx");
  ds.features = load_matrix(dir / "features.ncmx");
  if (ds.brain.rows() != count || ds.brain.cols() != brain_dim) {
    throw DataError((dir / "brain.ncmx").string() + ": shape " + std::to_string(ds.brain.rows()) +
                    "x" + std::to_string(ds.brain.cols()) + " does not match meta.json");
  }
  if (ds.features.rows() != count || ds.features.cols() != feature_dim) {
    throw DataError((dir / "features.ncmx").string() + ": shape " +
                    std::to_string(ds.features.rows()) + "x" + std::to_string(ds.features.cols()) +
                    " does not match meta.json");
  }

  ds.captions.assign(count, std::nullopt);
  const std::string cap_src = (dir / "captions.jsonl").string();
  std::istringstream lines(read_file(dir / "captions.jsonl"));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = cap_src + ":" + std::to_string(line_no);
    const Json j = parse_json(line, where);
    const auto ref = json_field<std::size_t>(j, "feature_ref", where);
    const auto id = json_field<std::uint64_t>(j, "id", where);
    if (ref >= count) throw DataError(where + ": feature_ref " + std::to_string(ref) + " out of range");
    if (ds.ids[ref] != id) {
      throw DataError(where + ": id " + std::to_string(id) + " does not match row " + std::to_string(ref));
    }
    if (ds.captions[ref]) throw DataError(where + ": second caption for id " + std::to_string(id));
    ds.captions[ref] = json_field<Sentence>(j, "tokens", where);
  }
  ds.validate();
  return ds;
}

std::vector<std::uint64_t> load_id_list(const std::filesystem::path& path) {
  std::istringstream lines(read_file(path));
  std::vector<std::uint64_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::uint64_t id = 0;
    const char* begin = line.data() + first;
    const char* end = line.data() + last + 1;
    const auto res = std::from_chars(begin, end, id);
    if (res.ec != std::errc{} || res.ptr != end) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": not an id");
    }
    ids.push_back(id);
  }
  return ids;
}

}  // namespace neurocap
