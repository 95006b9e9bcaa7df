#include "neurocap/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "neurocap/errors.hpp"
#include "neurocap/rng.hpp"

namespace neurocap {
namespace {

constexpr std::array<std::string_view, 8> kAdjectives{"small", "black", "white", "young",
                                                      "old",   "red",   "large", "brown"};
constexpr std::array<std::string_view, 8> kNouns{"man", "woman", "dog",   "cat",
                                                 "bird", "child", "horse", "train"};
constexpr std::array<std::string_view, 8> kVerbs{"riding",  "sitting", "standing", "walking",
                                                 "eating",  "flying",  "running",  "sleeping"};
constexpr std::array<std::string_view, 8> kPlaces{"beach", "street", "field", "kitchen",
                                                  "ocean", "park",   "table", "snow"};

Sentence make_sentence(std::size_t code) {
  const std::size_t a = code % 8;
  const std::size_t n = (code / 8) % 8;
  const std::size_t v = (code / 64) % 8;
  const std::size_t p = (code / 512) % 8;
  return {"a", std::string(kAdjectives[a]), std::string(kNouns[n]), "is",
          std::string(kVerbs[v]), "on", "the", std::string(kPlaces[p])};
}

void fill_normal(Matrix& m, double scale, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : m.values()) v = scale * normal(rng);
}

}  // namespace

void SynthSpec::validate() const {
  if (n_train + n_unlabeled == 0) throw ConfigError("synth: at least one row is required");
  if (brain_dim == 0 || feature_dim == 0) throw ConfigError("synth: dims must be >= 1");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ConfigError("synth: noise_std must be finite and >= 0");
  }
  if (!(cluster_spread >= 0.0) || !std::isfinite(cluster_spread)) {
    throw ConfigError("synth: cluster_spread must be finite and >= 0");
  }
  if (clusters == 0 || templates_per_cluster == 0) {
    throw ConfigError("synth: clusters and templates_per_cluster must be >= 1");
  }
  if (clusters * templates_per_cluster > 4096) {
    throw ConfigError("synth: the caption grammar has only 4096 distinct templates");
  }
  if (!(ar1 >= 0.0 && ar1 < 1.0)) throw ConfigError("synth: ar1 must lie in [0, 1)");
}

SynthSpec paper_scale_ratio_preset(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.n_train = 4500;
  spec.n_unlabeled = 7540;
  return spec;
}

std::vector<std::string_view> synth_lexicon() {
  std::vector<std::string_view> words{"a", "is", "on", "the"};
  for (const auto* list : {&kAdjectives, &kNouns, &kVerbs, &kPlaces}) {
    words.insert(words.end(), list->begin(), list->end());
  }
  return words;
}

SynthData synth_generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_train + spec.n_unlabeled;
  const std::size_t f = spec.feature_dim;
  SynthData out;

  // Distinct templates: a seeded permutation of the grammar's code space.
  std::vector<std::size_t> codes(4096);
  for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = i;
  Rng grammar = make_stream(spec.seed, "grammar");
  std::shuffle(codes.begin(), codes.end(), grammar);
  out.templates.resize(spec.clusters);
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    for (std::size_t t = 0; t < spec.templates_per_cluster; ++t) {
      out.templates[c].push_back(make_sentence(codes[c * spec.templates_per_cluster + t]));
    }
  }

  out.centers = Matrix(spec.clusters, f);
  Rng centers = make_stream(spec.seed, "centers");
  fill_normal(out.centers, 1.0, centers);

  out.planted_map = Matrix(f, spec.brain_dim);
  Rng map = make_stream(spec.seed, "map");
  fill_normal(out.planted_map, 1.0 / std::sqrt(static_cast<double>(f)), map);

  Rng assign = make_stream(spec.seed, "assign");
  std::uniform_int_distribution<std::size_t> pick_cluster(0, spec.clusters - 1);
  std::uniform_int_distribution<std::size_t> pick_template(0, spec.templates_per_cluster - 1);
  Rng jitter = make_stream(spec.seed, "jitter");
  std::normal_distribution<double> normal(0.0, 1.0);

  PairedDataset& ds = out.dataset;
  ds.features = Matrix(n, f);
  out.cluster.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = pick_cluster(assign);
    const std::size_t t = pick_template(assign);
    out.cluster[i] = c;
    auto row = ds.features.row(i);
    auto centre = out.centers.row(c);
    for (std::size_t k = 0; k < f; ++k) row[k] = centre[k] + spec.cluster_spread * normal(jitter);
    ds.ids.push_back(i);
    if (i < spec.n_train) {
      ds.captions.emplace_back(out.templates[c][t]);
      ds.splits.push_back(Split::train);
    } else {
      ds.captions.emplace_back(std::nullopt);
      ds.splits.push_back(Split::unlabeled);
    }
  }

  ds.brain = matmul(ds.features, out.planted_map);
  if (spec.noise_std > 0.0) {
    Rng noise = make_stream(spec.seed, "noise");
    const double innovation = std::sqrt(1.0 - spec.ar1 * spec.ar1);
    std::vector<double> prev(spec.brain_dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = ds.brain.row(i);
      for (std::size_t k = 0; k < spec.brain_dim; ++k) {
        const double z = spec.noise_std * normal(noise);
        prev[k] = i == 0 ? z : spec.ar1 * prev[k] + innovation * z;
        row[k] += prev[k];
      }
    }
  }

  ds.provenance = "synth seed=" + std::to_string(spec.seed);
  ds.seed = spec.seed;
  return out;
}

}  // namespace neurocap
