#include "config.hpp"

#include <algorithm>
#include <array>
#include <string_view>

#include <toml.hpp>

#include "neurocap/errors.hpp"

namespace neurocap::cli {
namespace {

using Kinds = std::vector<ModelKind>;

constexpr std::array<std::string_view, 6> kCommonKeys{"dataset",     "output",     "seed",
                                                      "standardize", "voxel-mask", "batch-size"};

const Kinds kSgd{ModelKind::mlp3, ModelKind::dnn5, ModelKind::ae};
const Kinds kAll{ModelKind::ridge, ModelKind::mlp3, ModelKind::dnn5, ModelKind::ae, ModelKind::lm};

// Model-specific keys and the kinds that read them.
const std::vector<std::pair<std::string_view, Kinds>>& model_keys() {
  static const std::vector<std::pair<std::string_view, Kinds>> keys{
      {"learning-rate", kSgd},
      {"gradient-clipping-threshold", {ModelKind::mlp3, ModelKind::dnn5, ModelKind::ae, ModelKind::lm}},
      {"l2-norm", kAll},
      {"epochs", {ModelKind::mlp3, ModelKind::dnn5, ModelKind::lm}},
      {"pretraining-epochs", {ModelKind::dnn5, ModelKind::ae}},
      {"units-per-layer", {ModelKind::mlp3, ModelKind::dnn5, ModelKind::ae, ModelKind::lm}},
      {"activation", kSgd},
      {"initial-parameters", {ModelKind::mlp3, ModelKind::dnn5, ModelKind::ae, ModelKind::lm}},
      {"a", {ModelKind::lm}},
      {"b1", {ModelKind::lm}},
      {"b2", {ModelKind::lm}},
      {"eps", {ModelKind::lm}},
      {"min-count", {ModelKind::lm}},
      {"word-embedding", {ModelKind::lm}},
  };
  return keys;
}

class Reader {
 public:
  Reader(const std::filesystem::path& file, TrainSettings& s)
      : file_(file), base_(file.parent_path()), s_(s) {}

  void apply(const toml::table& t, bool top_level) {
    for (const auto& [k, node] : t) {
      const std::string_view key = k.str();
      if (node.is_table()) {
        if (top_level && is_kind_name(key)) continue;
        fail(key, "unexpected table");
      }
      if (std::find(kCommonKeys.begin(), kCommonKeys.end(), key) != kCommonKeys.end()) {
        set_common(key, node);
        continue;
      }
      const auto it = std::find_if(model_keys().begin(), model_keys().end(),
                                   [&](const auto& e) { return e.first == key; });
      if (it == model_keys().end()) fail(key, "unknown key");
      if (std::find(it->second.begin(), it->second.end(), s_.kind) != it->second.end()) {
        set_model(key, node);
      } else if (!top_level) {
        fail(key, "not used by " + std::string(to_string(s_.kind)));
      }
    }
  }

 private:
  static bool is_kind_name(std::string_view key) {
    try {
      (void)parse_model_kind(key);
      return true;
    } catch (const ConfigError&) {
      return false;
    }
  }

  [[noreturn]] void fail(std::string_view key, const std::string& what) const {
    throw ConfigError(file_.string() + ": " + std::string(key) + ": " + what);
  }

  double number(std::string_view key, const toml::node& n) const {
    if (n.is_boolean()) fail(key, "expected a number");
    if (auto v = n.value<double>()) return *v;
    fail(key, "expected a number");
  }

  std::size_t count(std::string_view key, const toml::node& n, std::int64_t min) const {
    const auto v = n.is_integer() ? n.value<std::int64_t>() : std::nullopt;
    if (!v || *v < min) fail(key, "expected an integer >= " + std::to_string(min));
    return static_cast<std::size_t>(*v);
  }

  std::string text(std::string_view key, const toml::node& n) const {
    if (auto v = n.value<std::string>()) return *v;
    fail(key, "expected a string");
  }

  std::filesystem::path path(std::string_view key, const toml::node& n) const {
    const std::filesystem::path p = text(key, n);
    if (p.empty()) fail(key, "empty path");
    return p.is_absolute() ? p : (base_ / p).lexically_normal();
  }

  void set_common(std::string_view key, const toml::node& n) {
    if (key == "dataset") {
      s_.dataset = path(key, n);
    } else if (key == "output") {
      s_.output = path(key, n);
    } else if (key == "seed") {
      s_.seed = count(key, n, 0);
    } else if (key == "standardize") {
      const auto v = n.value<bool>();
      if (!v || !n.is_boolean()) fail(key, "expected true or false");
      s_.standardize = *v;
    } else if (key == "voxel-mask") {
      s_.voxel_mask = path(key, n);
    } else if (key == "batch-size") {
      s_.batch_size = count(key, n, 1);
    }
  }

  void set_model(std::string_view key, const toml::node& n) {
    if (key == "learning-rate") {
      s_.learning_rate = number(key, n);
    } else if (key == "gradient-clipping-threshold") {
      s_.clip_threshold = number(key, n);
    } else if (key == "l2-norm") {
      s_.l2 = number(key, n);
    } else if (key == "epochs") {
      s_.epochs = count(key, n, 0);
    } else if (key == "pretraining-epochs") {
      s_.pretraining_epochs = count(key, n, 0);
    } else if (key == "units-per-layer") {
      s_.units.clear();
      if (const toml::array* arr = n.as_array()) {
        for (const toml::node& u : *arr) s_.units.push_back(count(key, u, 1));
        if (s_.units.empty()) fail(key, "empty list");
      } else {
        s_.units.push_back(count(key, n, 1));
      }
    } else if (key == "activation") {
      s_.activation = parse_activation(text(key, n));
    } else if (key == "initial-parameters") {
      const std::string v = text(key, n);
      s_.initial_parameters = v == "scaled-normal" || v == "std-normal" ? v : path(key, n).string();
    } else if (key == "a") {
      s_.adam.learning_rate = number(key, n);
    } else if (key == "b1") {
      s_.adam.beta1 = number(key, n);
    } else if (key == "b2") {
      s_.adam.beta2 = number(key, n);
    } else if (key == "eps") {
      s_.adam.eps = number(key, n);
    } else if (key == "min-count") {
      s_.min_count = count(key, n, 1);
    } else if (key == "word-embedding") {
      s_.word_embedding = path(key, n);
    }
  }

  std::filesystem::path file_;
  std::filesystem::path base_;
  TrainSettings& s_;
};

}  // namespace

SgdConfig TrainSettings::sgd() const {
  return SgdConfig{learning_rate, clip_threshold, l2};
}

AdamConfig TrainSettings::adam_config() const {
  AdamConfig c = adam;
  c.clip_threshold = clip_threshold;
  c.l2 = l2;
  return c;
}

TrainSettings default_settings(ModelKind kind) {
  TrainSettings s;
  s.kind = kind;
  switch (kind) {
    case ModelKind::ridge:
      s.l2 = 0.5;
      break;
    case ModelKind::lm:
      s.epochs = 100;
      break;
    default:
      break;
  }
  return s;
}

TrainSettings load_train_settings(const std::filesystem::path& file, ModelKind kind) {
  toml::table doc;
  try {
    doc = toml::parse_file(file.string());
  } catch (const toml::parse_error& e) {
    throw ConfigError(file.string() + ":" + std::to_string(e.source().begin.line) + ": " +
                      std::string(e.description()));
  }
  TrainSettings s = default_settings(kind);
  const std::filesystem::path absolute = std::filesystem::absolute(file);
  s.base = absolute.parent_path();
  Reader reader(absolute, s);
  reader.apply(doc, true);
  if (const toml::table* section = doc[to_string(kind)].as_table()) reader.apply(*section, false);

  if (s.dataset.empty()) throw ConfigError(file.string() + ": dataset is required");
  if (kind == ModelKind::ridge) {
    if (!(s.l2 >= 0.0)) throw ConfigError(file.string() + ": l2-norm must be >= 0");
  } else if (kind == ModelKind::lm) {
    validate(s.adam_config());
  } else {
    validate(s.sgd());
  }
  return s;
}

nlohmann::ordered_json TrainSettings::to_json() const {
  const auto rel = [&](const std::filesystem::path& p) {
    return base.empty() ? p.string() : p.lexically_relative(base).string();
  };
  const bool random_init = initial_parameters.empty() || initial_parameters == "scaled-normal" ||
                           initial_parameters == "std-normal";
  const std::string init = random_init ? initial_parameters : rel(initial_parameters);
  nlohmann::ordered_json j;
  j["kind"] = to_string(kind);
  j["dataset"] = rel(dataset);
  j["seed"] = seed;
  j["standardize"] = standardize;
  j["voxel-mask"] = voxel_mask ? nlohmann::ordered_json(rel(*voxel_mask)) : nullptr;
  j["batch-size"] = batch_size;
  j["l2-norm"] = l2;
  switch (kind) {
    case ModelKind::ridge:
      break;
    case ModelKind::lm:
      j["a"] = adam.learning_rate;
      j["b1"] = adam.beta1;
      j["b2"] = adam.beta2;
      j["eps"] = adam.eps;
      j["gradient-clipping-threshold"] = clip_threshold;
      j["epochs"] = epochs;
      j["units-per-layer"] = units;
      j["min-count"] = min_count;
      j["word-embedding"] = word_embedding ? nlohmann::ordered_json(rel(*word_embedding)) : nullptr;
      j["initial-parameters"] = init;
      break;
    default:
      j["learning-rate"] = learning_rate;
      j["gradient-clipping-threshold"] = clip_threshold;
      if (kind != ModelKind::ae) j["epochs"] = epochs;
      if (kind != ModelKind::mlp3) j["pretraining-epochs"] = pretraining_epochs;
      j["units-per-layer"] = units;
      j["activation"] = std::string(to_string(activation));
      j["initial-parameters"] = init;
      break;
  }
  return j;
}

}  // namespace neurocap::cli
