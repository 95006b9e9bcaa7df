#include <iostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "commands.hpp"
#include "neurocap/errors.hpp"
#include "neurocap/eval/metrics.hpp"
#include "neurocap/mathcore/binary_io.hpp"
#include "neurocap/pipeline/pipeline.hpp"
#include "neurocap/pipeline/voxels.hpp"

namespace neurocap::cli {
namespace {

using json = nlohmann::json;

// Calls `fn(line_number, object)` for every non-blank line of a JSONL file.
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw DataError(path.string() + ":" + std::to_string(number) + ": not a JSON object");
    }
    try {
      fn(number, j);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

Sentence sentence_of(const json& j) {
  if (j.is_string()) return tokenize(j.get<std::string>());
  return j.get<Sentence>();
}

std::string id_of(const json& j) {
  const json& id = j.at("id");
  return id.is_string() ? id.get<std::string>() : id.dump();
}

std::vector<CandidateSample> load_candidates(const std::filesystem::path& path) {
  std::vector<CandidateSample> out;
  for_each_jsonl(path, [&](std::size_t number, const json& j) {
    const json& captions = j.at("captions");
    if (!captions.is_array() || captions.empty()) {
      throw DataError(path.string() + ":" + std::to_string(number) + ": no captions");
    }
    const json& best = captions.front();
    out.push_back({id_of(j), best.contains("tokens") ? sentence_of(best["tokens"]) : sentence_of(best.at("text"))});
  });
  return out;
}

std::vector<ReferenceSet> load_references(const std::filesystem::path& path) {
  std::vector<ReferenceSet> out;
  for_each_jsonl(path, [&](std::size_t, const json& j) {
    ReferenceSet r{id_of(j), {}};
    for (const json& ref : j.at("references")) r.references.push_back(sentence_of(ref));
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<std::size_t> dataset_rows(const PairedDataset& ds, std::span<const CandidateSample> candidates) {
  std::unordered_map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < ds.size(); ++i) where.emplace(std::to_string(ds.ids[i]), i);
  std::vector<std::size_t> rows;
  for (const CandidateSample& c : candidates) {
    const auto it = where.find(c.id);
    if (it == where.end()) throw DataError("candidate id " + c.id + " is not in the dataset");
    rows.push_back(it->second);
  }
  return rows;
}

}  // namespace

void run_eval(const EvalOptions& o) {
  const int sources = int(o.references.has_value()) + int(o.pseudo_lm.has_value()) +
                      int(o.dataset.has_value() && !o.pseudo_lm);
  if (sources != 1) {
    throw ConfigError("eval needs exactly one reference source: --references, --dataset or --pseudo-lm with --dataset");
  }
  if (o.pseudo_lm && !o.dataset) throw ConfigError("--pseudo-lm needs --dataset for the image features");
  if (o.width == 0) throw ConfigError("--width must be at least 1");

  std::vector<CandidateSample> candidates = load_candidates(o.candidates);
  if (o.ids) {
    std::unordered_set<std::string> keep;
    for (std::uint64_t id : load_id_list(*o.ids)) keep.insert(std::to_string(id));
    std::unordered_set<std::string> seen;
    std::erase_if(candidates, [&](const CandidateSample& c) { return !keep.contains(c.id); });
    for (const CandidateSample& c : candidates) seen.insert(c.id);
    for (const std::string& id : keep) {
      if (!seen.contains(id)) throw DataError("id " + id + " has no candidate in " + o.candidates.string());
    }
  }

  std::vector<ReferenceSet> references;
  std::string source;
  if (o.references) {
    references = load_references(*o.references);
    if (o.ids) {
      std::unordered_set<std::string> keep;
      for (const CandidateSample& c : candidates) keep.insert(c.id);
      std::erase_if(references, [&](const ReferenceSet& r) { return !keep.contains(r.id); });
    }
    source = "file";
  } else {
    const PairedDataset ds = load_dataset(*o.dataset);
    const std::vector<std::size_t> rows = dataset_rows(ds, candidates);
    if (o.pseudo_lm) {
      const LanguageModel lm = std::get<LanguageModel>(load_checkpoint(*o.pseudo_lm, ModelKind::lm).model);
      const auto sets = make_pseudo_groundtruth(lm, ds.features.select_rows(rows), o.width, {o.max_len, false});
      for (std::size_t i = 0; i < rows.size(); ++i) {
        ReferenceSet r{candidates[i].id, {}};
        for (const TokenSequence& t : sets[i]) r.references.push_back(lm.vocab.decode(t));
        references.push_back(std::move(r));
      }
      source = "pseudo-groundtruth";
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!ds.captions[rows[i]]) throw DataError("record " + candidates[i].id + " has no caption");
        references.push_back({candidates[i].id, {*ds.captions[rows[i]]}});
      }
      source = "dataset";
    }
  }

  auto [bleu, meteor] = evaluate_run(candidates, references);
  for (MetricReport* r : {&bleu, &meteor}) {
    r->parameters["references"] = source;
    if (o.pseudo_lm) r->parameters["pseudo-width"] = std::to_string(o.width);
  }

  StagedDirectory out(o.out);
  write_report_json(out / "bleu4.json", bleu);
  write_report_csv(out / "bleu4.csv", bleu);
  write_report_json(out / "meteor_lite.json", meteor);
  write_report_csv(out / "meteor_lite.csv", meteor);
  out.commit();
  std::cout << "bleu4 " << bleu.corpus_score << "\nmeteor_lite " << meteor.corpus_score << "\n";
}

void run_mask(const MaskOptions& o) {
  const std::vector<double> scores = load_scores(o.scores);
  const VoxelMask mask = select_voxels(scores, o.threshold);
  if (o.out.has_parent_path()) std::filesystem::create_directories(o.out.parent_path());
  save_mask(o.out, mask);
  std::cout << "selected " << mask.count << " of " << mask.length() << " voxels\n";
}

}  // namespace neurocap::cli
