#include "neurocap/persist/checkpoint.hpp"

#include <map>

#include <boost/crc.hpp>
#include <json.hpp>

#include "neurocap/mathcore/binary_io.hpp"

namespace neurocap {
namespace {

using Json = nlohmann::ordered_json;
using MatrixMap = std::map<std::string, Matrix>;

constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 8;

struct Payload {
  Json descriptor;
  std::vector<std::pair<std::string, Matrix>> matrices;

  void add(std::string name, const Matrix& m) { matrices.emplace_back(std::move(name), m); }
};

void add_standardizer(Payload& p, const Standardizer& s) {
  p.descriptor["standardized"] = !s.is_identity();
  if (!s.is_identity()) {
    p.add("input.mean", s.mean);
    p.add("input.scale", s.scale);
  }
}

void add_layer(Payload& p, const std::string& prefix, const DenseLayer& layer) {
  p.add(prefix + ".weight", layer.weight);
  p.add(prefix + ".bias", layer.bias);
}

Json adam_config_json(const AdamConfig& c) {
  return Json{{"learning_rate", c.learning_rate}, {"beta1", c.beta1},     {"beta2", c.beta2},
              {"eps", c.eps},                     {"clip_threshold", c.clip_threshold},
              {"l2", c.l2}};
}

std::vector<std::size_t> layer_widths(const MlpModel& m) {
  std::vector<std::size_t> w;
  if (m.layers.empty()) return w;
  w.push_back(m.layers.front().input_dim());
  for (const DenseLayer& l : m.layers) w.push_back(l.output_dim());
  return w;
}

Payload encode_model(ModelKind kind, const Checkpoint& ckpt) {
  Payload p;
  p.descriptor["kind"] = to_string(kind);
  switch (kind) {
    case ModelKind::ridge: {
      const auto* m = std::get_if<RidgeModel>(&ckpt.model);
      if (!m) throw KindError("checkpoint: kind ridge needs a RidgeModel");
      p.descriptor["input"] = m->input_dim();
      p.descriptor["output"] = m->output_dim();
      p.descriptor["lambda"] = m->lambda;
      add_standardizer(p, m->input);
      p.add("weight", m->weight);
      p.add("bias", m->bias);
      break;
    }
    case ModelKind::mlp3:
    case ModelKind::dnn5: {
      const auto* m = std::get_if<MlpModel>(&ckpt.model);
      if (!m) throw KindError("checkpoint: kind " + std::string(to_string(kind)) + " needs an MlpModel");
      m->validate();
      const std::size_t widths = kind == ModelKind::mlp3 ? 3 : 5;
      if (m->arch.size() != widths) {
        throw KindError("checkpoint: kind " + std::string(to_string(kind)) + " needs " +
                        std::to_string(widths) + " layer widths, model has " +
                        std::to_string(m->arch.size()));
      }
      p.descriptor["arch"] = m->arch;
      Json acts = Json::array();
      for (const DenseLayer& l : m->layers) acts.push_back(to_string(l.activation));
      p.descriptor["activations"] = std::move(acts);
      add_standardizer(p, m->input);
      for (std::size_t i = 0; i < m->layers.size(); ++i) {
        add_layer(p, "layer" + std::to_string(i), m->layers[i]);
      }
      break;
    }
    case ModelKind::ae: {
      const auto* m = std::get_if<AutoencoderStack>(&ckpt.model);
      if (!m) throw KindError("checkpoint: kind ae needs an AutoencoderStack");
      m->validate();
      std::vector<std::size_t> dims{m->input_dim()};
      for (std::size_t h : m->hidden_dims()) dims.push_back(h);
      p.descriptor["dims"] = dims;
      Json enc = Json::array();
      Json dec = Json::array();
      for (const DenseLayer& l : m->encoders) enc.push_back(to_string(l.activation));
      for (const DenseLayer& l : m->decoders) dec.push_back(to_string(l.activation));
      p.descriptor["encoder_activations"] = std::move(enc);
      p.descriptor["decoder_activations"] = std::move(dec);
      p.descriptor["loss_curves"] = m->loss_curves;
      add_standardizer(p, m->input);
      for (std::size_t i = 0; i < m->encoders.size(); ++i) {
        add_layer(p, "encoder" + std::to_string(i), m->encoders[i]);
        add_layer(p, "decoder" + std::to_string(i), m->decoders[i]);
      }
      break;
    }
    case ModelKind::lm: {
      const auto* m = std::get_if<LanguageModel>(&ckpt.model);
      if (!m) throw KindError("checkpoint: kind lm needs a LanguageModel");
      m->validate();
      p.descriptor["vocabulary"] = m->vocab.tokens();
      p.descriptor["feature_dim"] = m->feature_dim();
      p.descriptor["embed_dim"] = m->embed_dim();
      p.descriptor["hidden_dim"] = m->hidden_dim();
      const auto params = m->named_parameters();
      for (const auto& [name, mat] : params) p.add(name, *mat);
      if (ckpt.lm_resume) {
        const LmResumeState& r = *ckpt.lm_resume;
        if (r.states.size() != params.size()) {
          throw ShapeError("checkpoint: optimizer state count does not match parameters");
        }
        Json resume;
        resume["next_epoch"] = r.next_epoch;
        resume["seed"] = r.seed;
        resume["batch_size"] = r.options.batch_size;
        resume["config"] = adam_config_json(r.config);
        Json adam = Json::array();
        for (std::size_t i = 0; i < params.size(); ++i) {
          const AdamState& s = r.states[i];
          adam.push_back({{"t", s.t},
                          {"learning_rate", s.learning_rate},
                          {"beta1", s.beta1},
                          {"beta2", s.beta2},
                          {"eps", s.eps}});
          p.add("adam." + params[i].first + ".m", s.m);
          p.add("adam." + params[i].first + ".v", s.v);
        }
        resume["adam"] = std::move(adam);
        p.descriptor["resume"] = std::move(resume);
      }
      break;
    }
  }
  if (ckpt.lm_resume && kind != ModelKind::lm) {
    throw KindError("checkpoint: optimizer resume state is only stored for kind lm");
  }
  if (ckpt.next_epoch) p.descriptor["next_epoch"] = *ckpt.next_epoch;
  return p;
}

// Decoding helpers. Every failure is a DataError naming the source.
class Decoder {
 public:
  Decoder(const Json& descriptor, MatrixMap matrices, std::string source)
      : d_(descriptor), matrices_(std::move(matrices)), source_(std::move(source)) {}

  template <typename T>
  T field(const Json& obj, const char* key) const {
    if (!obj.is_object() || !obj.contains(key)) fail(std::string("missing descriptor field \"") + key + "\"");
    try {
      return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(std::string("descriptor field \"") + key + "\" has the wrong type");
    }
  }
  template <typename T>
  T field(const char* key) const {
    return field<T>(d_, key);
  }

  Matrix take(const std::string& name) {
    auto it = matrices_.find(name);
    if (it == matrices_.end()) fail("missing matrix \"" + name + "\"");
    Matrix m = std::move(it->second);
    matrices_.erase(it);
    return m;
  }

  Standardizer standardizer() {
    Standardizer s;
    if (field<bool>("standardized")) {
      s.mean = take("input.mean");
      s.scale = take("input.scale");
    }
    return s;
  }

  DenseLayer layer(const std::string& prefix, Activation act) {
    DenseLayer l;
    l.weight = take(prefix + ".weight");
    l.bias = take(prefix + ".bias");
    l.activation = act;
    return l;
  }

  std::vector<Activation> activations(const char* key) const {
    std::vector<Activation> out;
    try {
      for (const std::string& s : field<std::vector<std::string>>(key)) out.push_back(parse_activation(s));
    } catch (const ConfigError& e) {
      fail(e.what());
    }
    return out;
  }

  void finish() const {
    if (!matrices_.empty()) fail("unexpected matrix \"" + matrices_.begin()->first + "\"");
  }

  [[noreturn]] void fail(const std::string& what) const { throw DataError(source_ + ": " + what); }

 private:
  const Json& d_;
  MatrixMap matrices_;
  std::string source_;
};

void require_rows_cols(const Decoder& dec, const Matrix& m, std::size_t rows, std::size_t cols,
                       const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) dec.fail(name + " has the wrong shape");
}

void check_standardizer(const Decoder& dec, const Standardizer& s, std::size_t dim) {
  if (s.is_identity()) return;
  require_rows_cols(dec, s.mean, 1, dim, "input.mean");
  require_rows_cols(dec, s.scale, 1, dim, "input.scale");
}

CheckpointModel decode_model(ModelKind kind, Decoder& dec, const Json& d, Checkpoint& out) {
  switch (kind) {
    case ModelKind::ridge: {
      RidgeModel m;
      m.lambda = dec.field<double>("lambda");
      m.input = dec.standardizer();
      m.weight = dec.take("weight");
      m.bias = dec.take("bias");
      const auto in = dec.field<std::size_t>("input");
      const auto outd = dec.field<std::size_t>("output");
      require_rows_cols(dec, m.weight, in, outd, "weight");
      require_rows_cols(dec, m.bias, 1, outd, "bias");
      check_standardizer(dec, m.input, in);
      return m;
    }
    case ModelKind::mlp3:
    case ModelKind::dnn5: {
      MlpModel m;
      m.arch = dec.field<std::vector<std::size_t>>("arch");
      const std::size_t widths = kind == ModelKind::mlp3 ? 3 : 5;
      if (m.arch.size() != widths) {
        throw KindError(std::string("checkpoint: descriptor of kind ") + std::string(to_string(kind)) +
                        " lists " + std::to_string(m.arch.size()) + " layer widths");
      }
      const auto acts = dec.activations("activations");
      if (acts.size() != widths - 1) dec.fail("activation list does not match the layer count");
      m.input = dec.standardizer();
      for (std::size_t i = 0; i + 1 < widths; ++i) {
        m.layers.push_back(dec.layer("layer" + std::to_string(i), acts[i]));
      }
      m.validate();
      if (layer_widths(m) != m.arch) dec.fail("layer shapes do not match the architecture");
      check_standardizer(dec, m.input, m.arch.front());
      return m;
    }
    case ModelKind::ae: {
      AutoencoderStack m;
      const auto dims = dec.field<std::vector<std::size_t>>("dims");
      const auto enc = dec.activations("encoder_activations");
      const auto decs = dec.activations("decoder_activations");
      if (dims.size() < 2 || enc.size() != dims.size() - 1 || decs.size() != enc.size()) {
        dec.fail("autoencoder descriptor lists inconsistent layer counts");
      }
      m.loss_curves = dec.field<std::vector<std::vector<double>>>("loss_curves");
      m.input = dec.standardizer();
      for (std::size_t i = 0; i < enc.size(); ++i) {
        m.encoders.push_back(dec.layer("encoder" + std::to_string(i), enc[i]));
        m.decoders.push_back(dec.layer("decoder" + std::to_string(i), decs[i]));
        require_rows_cols(dec, m.encoders[i].weight, dims[i], dims[i + 1], "encoder weight");
      }
      m.validate();
      check_standardizer(dec, m.input, dims.front());
      return m;
    }
    case ModelKind::lm: {
      LanguageModel m;
      try {
        m.vocab = Vocabulary::from_tokens(dec.field<std::vector<std::string>>("vocabulary"));
      } catch (const DataError& e) {
        dec.fail(e.what());
      }
      for (auto& [name, mat] : m.named_parameters()) *mat = dec.take(name);
      m.validate();
      if (m.feature_dim() != dec.field<std::size_t>("feature_dim") ||
          m.embed_dim() != dec.field<std::size_t>("embed_dim") ||
          m.hidden_dim() != dec.field<std::size_t>("hidden_dim")) {
        dec.fail("language model dims do not match the descriptor");
      }
      if (d.contains("resume")) {
        const Json& r = d.at("resume");
        LmResumeState state;
        state.next_epoch = dec.field<std::size_t>(r, "next_epoch");
        state.seed = dec.field<std::uint64_t>(r, "seed");
        state.options.batch_size = dec.field<std::size_t>(r, "batch_size");
        const Json& c = r.contains("config") ? r.at("config") : Json();
        state.config.learning_rate = dec.field<double>(c, "learning_rate");
        state.config.beta1 = dec.field<double>(c, "beta1");
        state.config.beta2 = dec.field<double>(c, "beta2");
        state.config.eps = dec.field<double>(c, "eps");
        state.config.clip_threshold = dec.field<double>(c, "clip_threshold");
        state.config.l2 = dec.field<double>(c, "l2");
        const auto params = m.named_parameters();
        const Json& adam = r.contains("adam") ? r.at("adam") : Json();
        if (!adam.is_array() || adam.size() != params.size()) dec.fail("optimizer state count mismatch");
        for (std::size_t i = 0; i < params.size(); ++i) {
          AdamState s;
          s.t = dec.field<std::uint64_t>(adam[i], "t");
          s.learning_rate = dec.field<double>(adam[i], "learning_rate");
          s.beta1 = dec.field<double>(adam[i], "beta1");
          s.beta2 = dec.field<double>(adam[i], "beta2");
          s.eps = dec.field<double>(adam[i], "eps");
          s.m = dec.take("adam." + params[i].first + ".m");
          s.v = dec.take("adam." + params[i].first + ".v");
          if (!(s.m.rows() == params[i].second->rows() && s.m.cols() == params[i].second->cols() &&
                s.v.rows() == s.m.rows() && s.v.cols() == s.m.cols())) {
            dec.fail("optimizer moments for " + params[i].first + " have the wrong shape");
          }
          state.states.push_back(std::move(s));
        }
        out.lm_resume = std::move(state);
      }
      return m;
    }
  }
  dec.fail("unknown model kind");
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ridge: return "ridge";
    case ModelKind::mlp3: return "mlp3";
    case ModelKind::dnn5: return "dnn5";
    case ModelKind::lm: return "lm";
    case ModelKind::ae: return "ae";
  }
  return "ridge";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::ridge, ModelKind::mlp3, ModelKind::dnn5, ModelKind::lm, ModelKind::ae}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown model kind \"" + std::string(name) + "\"");
}

std::uint64_t crc64(std::string_view bytes) {
  boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true> crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const Payload p = encode_model(ckpt.kind, ckpt);
  ByteWriter payload;
  payload.string(to_string(ckpt.kind));
  payload.string(p.descriptor.dump());
  payload.string(ckpt.config);
  payload.u64(p.matrices.size());
  for (const auto& [name, m] : p.matrices) {
    payload.string(name);
    payload.matrix(m);
  }
  const std::string body = std::move(payload).take();

  ByteWriter out;
  out.raw(kCheckpointMagic);
  out.u32(kCheckpointVersion);
  out.u32(static_cast<std::uint32_t>(ckpt.kind));
  out.u64(body.size());
  out.raw(body);
  out.u64(crc64(body));
  return std::move(out).take();
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source) {
  ByteReader header(bytes, source);
  header.expect_magic(kCheckpointMagic);
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw VersionError(source + ": checkpoint format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t tag = header.u32();
  if (tag > static_cast<std::uint32_t>(ModelKind::ae)) {
    throw KindError(source + ": unknown model kind tag " + std::to_string(tag));
  }
  const auto kind = static_cast<ModelKind>(tag);
  const std::uint64_t length = header.u64();
  if (length > bytes.size() - kHeaderSize) {
    header.fail("payload of " + std::to_string(length) + " bytes is truncated");
  }
  const std::string_view body = header.raw(static_cast<std::size_t>(length));
  const std::uint64_t stored = header.u64();
  if (!header.at_end()) header.fail("trailing bytes after the checksum");
  if (crc64(body) != stored) throw ChecksumError(source + ": payload checksum mismatch");

  ByteReader reader(body, source + " payload");
  const std::string name = reader.string();
  if (name != to_string(kind)) {
    throw KindError(source + ": header kind " + std::string(to_string(kind)) +
                    " does not match descriptor kind " + name);
  }
  Json descriptor;
  try {
    descriptor = Json::parse(reader.string());
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(source + ": bad architecture descriptor: " + e.what());
  }
  Checkpoint out;
  out.kind = kind;
  out.config = reader.string();
  const std::uint64_t count = reader.u64();
  MatrixMap matrices;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string key = reader.string();
    Matrix m = reader.matrix();
    if (!matrices.emplace(key, std::move(m)).second) reader.fail("duplicate matrix \"" + key + "\"");
  }
  if (!reader.at_end()) reader.fail("trailing bytes in payload");

  Decoder dec(descriptor, std::move(matrices), source);
  if (dec.field<std::string>("kind") != name) throw KindError(source + ": descriptor kind mismatch");
  try {
    out.model = decode_model(kind, dec, descriptor, out);
  } catch (const ShapeError& e) {
    throw DataError(source + ": " + e.what());
  }
  dec.finish();
  if (descriptor.contains("next_epoch")) out.next_epoch = dec.field<std::size_t>("next_epoch");
  return out;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, ModelKind expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.kind != expected) {
    throw KindError(path.string() + ": checkpoint holds kind " + std::string(to_string(ckpt.kind)) +
                    ", expected " + std::string(to_string(expected)));
  }
  return ckpt;
}

Regressor load_regressor(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (auto* r = std::get_if<RidgeModel>(&ckpt.model)) return std::move(*r);
  if (auto* m = std::get_if<MlpModel>(&ckpt.model)) return std::move(*m);
  throw KindError(path.string() + ": checkpoint of kind " + std::string(to_string(ckpt.kind)) +
                  " is not a brain-to-feature regressor");
}

}  // namespace neurocap
