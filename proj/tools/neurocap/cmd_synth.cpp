#include <iostream>

#include <json.hpp>

#include "commands.hpp"
#include "neurocap/data/synth.hpp"
#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"

namespace neurocap::cli {

void run_synth(const SynthOptions& o) {
  SynthSpec spec;
  if (o.preset) {
    if (*o.preset != "paper-scale-ratio") throw ConfigError("unknown preset \"" + *o.preset + "\"");
    spec = paper_scale_ratio_preset(o.seed);
  }
  spec.seed = o.seed;
  if (o.n_train) spec.n_train = *o.n_train;
  if (o.n_unlabeled) spec.n_unlabeled = *o.n_unlabeled;
  if (o.brain_dim) spec.brain_dim = *o.brain_dim;
  if (o.feature_dim) spec.feature_dim = *o.feature_dim;
  if (o.noise_std) spec.noise_std = *o.noise_std;
  if (o.clusters) spec.clusters = *o.clusters;
  if (o.cluster_spread) spec.cluster_spread = *o.cluster_spread;
  if (o.templates) spec.templates_per_cluster = *o.templates;
  if (o.ar1) spec.ar1 = *o.ar1;
  spec.validate();

  SynthData data = synth_generate(spec);
  assign_split(data.dataset, o.train_fraction, o.seed);

  StagedDirectory out(o.out);
  save_dataset(data.dataset, out.path());
  save_matrix(out / "planted_map.ncmx", data.planted_map);

  nlohmann::ordered_json j;
  j["seed"] = spec.seed;
  j["n_train"] = spec.n_train;
  j["n_unlabeled"] = spec.n_unlabeled;
  j["brain_dim"] = spec.brain_dim;
  j["feature_dim"] = spec.feature_dim;
  j["noise_std"] = spec.noise_std;
  j["clusters"] = spec.clusters;
  j["cluster_spread"] = spec.cluster_spread;
  j["templates_per_cluster"] = spec.templates_per_cluster;
  j["ar1"] = spec.ar1;
  j["train_fraction"] = o.train_fraction;
  write_file_atomic(out / "synth.json", j.dump(2) + "\n");
  out.commit();

  std::cout << "wrote " << data.dataset.size() << " records ("
            << data.dataset.rows_in(Split::train).size() << " train, "
            << data.dataset.rows_in(Split::test).size() << " test, "
            << data.dataset.rows_in(Split::unlabeled).size() << " unlabeled) to " << o.out.string() << "\n";
}

}  // namespace neurocap::cli
