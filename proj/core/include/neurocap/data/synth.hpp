#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "neurocap/data/dataset.hpp"

namespace neurocap {

/// Synthetic paired-data generator with a planted linear brain map.
struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t n_train = 500;      ///< labeled (captioned) rows
  std::size_t n_unlabeled = 0;    ///< rows without a caption
  std::size_t brain_dim = 640;
  std::size_t feature_dim = 64;
  double noise_std = 0.1;
  std::size_t clusters = 8;
  double cluster_spread = 0.25;   ///< feature jitter around the cluster centre
  std::size_t templates_per_cluster = 1;
  double ar1 = 0.0;               ///< temporal correlation of the noise, in [0, 1)

  void validate() const;
};

/// n = 4,500 labeled and 7,540 unlabeled rows at desk-scale dims.
SynthSpec paper_scale_ratio_preset(std::uint64_t seed);

struct SynthData {
  PairedDataset dataset;
  Matrix planted_map;                 ///< feature_dim x brain_dim
  Matrix centers;                     ///< clusters x feature_dim
  std::vector<std::size_t> cluster;   ///< cluster of every row
  std::vector<std::vector<Sentence>> templates;  ///< caption templates per cluster
};

/// Rows are labeled first, then unlabeled; every row starts in Split::train
/// (labeled) or Split::unlabeled. Throws ConfigError on an invalid spec.
SynthData synth_generate(const SynthSpec& spec);

/// Words the caption grammar can emit.
std::vector<std::string_view> synth_lexicon();

}  // namespace neurocap
