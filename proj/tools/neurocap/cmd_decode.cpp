#include <iostream>

#include <json.hpp>

#include "commands.hpp"
#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"
#include "neurocap/pipeline/pipeline.hpp"
#include "neurocap/pipeline/retrieval.hpp"

namespace neurocap::cli {
namespace {

using json = nlohmann::ordered_json;

struct LoadedRegressor {
  Checkpoint ckpt;
  Regressor model;
};

LoadedRegressor load_regressor_checkpoint(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  Regressor model;
  if (auto* ridge = std::get_if<RidgeModel>(&ckpt.model)) {
    model = *ridge;
  } else if (auto* mlp = std::get_if<MlpModel>(&ckpt.model)) {
    model = *mlp;
  } else {
    throw KindError(path.string() + ": " + std::string(to_string(ckpt.kind)) + " checkpoint is not a regressor");
  }
  return {std::move(ckpt), std::move(model)};
}

// Feature rows for the records: the regressor's prediction from brain data,
// or the stored features when no regressor is given.
Matrix feature_rows(const Records& r, const std::optional<std::filesystem::path>& regressor) {
  if (!regressor) return r.features;
  const LoadedRegressor reg = load_regressor_checkpoint(*regressor);
  const Matrix brain = apply_recorded_mask(reg.ckpt, r.brain);
  if (brain.cols() != input_dim(reg.model)) {
    throw ShapeError("regressor expects " + std::to_string(input_dim(reg.model)) + " inputs, records have " +
                     std::to_string(brain.cols()));
  }
  return predict(reg.model, brain);
}

void write_jsonl(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

}  // namespace

void run_decode(const DecodeOptions& o) {
  if (o.from_features == o.regressor.has_value()) {
    throw ConfigError("decode needs exactly one of --regressor and --from-features");
  }
  if (o.beam && *o.beam == 0) throw ConfigError("--beam must be at least 1");
  if (o.max_len == 0) throw ConfigError("--max-len must be at least 1");

  const Records records = load_records(o.input);
  const LanguageModel lm = std::get<LanguageModel>(load_checkpoint(o.lm, ModelKind::lm).model);
  const Matrix features = feature_rows(records, o.regressor);
  if (features.cols() != lm.feature_proj.rows()) {
    throw ShapeError("language model expects " + std::to_string(lm.feature_proj.rows()) +
                     "-dimensional features, got " + std::to_string(features.cols()));
  }

  neurocap::DecodeOptions options;
  options.beam_width = o.beam;
  options.generation = {o.max_len, o.allow_unk};

  std::string out;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const std::vector<Hypothesis> hyps = generate(lm, features.row(i), options);
    json line;
    line["id"] = records.ids[i];
    json captions = json::array();
    for (std::size_t rank = 0; rank < hyps.size(); ++rank) {
      const Hypothesis& h = hyps[rank];
      json c;
      c["rank"] = rank + 1;
      c["text"] = lm.vocab.join(h.tokens);
      c["tokens"] = lm.vocab.decode(h.tokens);
      c["log_prob"] = h.log_prob;
      c["score"] = h.score;
      c["finished"] = h.finished;
      captions.push_back(std::move(c));
    }
    line["captions"] = std::move(captions);
    out += line.dump() + "\n";
  }
  write_jsonl(o.out, out);
  std::cout << "decoded " << features.rows() << " records -> " << o.out.string() << "\n";
}

void run_retrieve(const RetrieveOptions& o) {
  if (o.k == 0) throw ConfigError("--k must be at least 1");
  FeatureDatabase db;
  if (std::filesystem::is_directory(o.db)) {
    const PairedDataset ds = load_dataset(o.db);
    db = FeatureDatabase(ds.ids, ds.features);
  } else {
    db = load_feature_database(o.db);
  }
  const Records queries = load_records(o.queries);
  const Matrix features = feature_rows(queries, o.regressor);
  if (features.cols() != db.dim()) {
    throw ShapeError("database holds " + std::to_string(db.dim()) + "-dimensional features, queries have " +
                     std::to_string(features.cols()));
  }

  std::string out;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    json line;
    line["query"] = queries.ids[i];
    json neighbors = json::array();
    for (const Neighbor& n : retrieve_similar(features.row(i), db, o.k)) {
      neighbors.push_back({{"id", n.id}, {"mse", n.mse}});
    }
    line["neighbors"] = std::move(neighbors);
    out += line.dump() + "\n";
  }
  write_jsonl(o.out, out);
  std::cout << "retrieved " << features.rows() << " queries -> " << o.out.string() << "\n";
}

}  // namespace neurocap::cli
