#include "nmc/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nmc/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "model container I/O assumes a little-endian host");

namespace nmc {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'N', 'M', 'C', '1'};

std::array<uint32_t, 256> make_crc_table() {
  std::array<uint32_t, 256> table{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k)
      c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

uint32_t crc32_update(uint32_t crc, const void* data, size_t len) {
  static const std::array<uint32_t, 256> table = make_crc_table();
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i)
    crc = table[(crc ^ bytes[i]) & 0xFF] ^ (crc >> 8);
  return crc;
}

void append_u32(std::string& out, uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

json metadata_json(const EncoderModel& model, const Vocabulary& vocab,
                   NormScheme scheme, size_t max_len,
                   const std::optional<LabelSet>& labels) {
  const ModelConfig& c = model.config();
  json meta;
  meta["kind"] = head_kind_name(model.head_kind());
  meta["config"] = {
      {"vocab_size", c.vocab_size},     {"hidden_size", c.hidden_size},
      {"n_layers", c.n_layers},         {"n_heads", c.n_heads},
      {"ffn_size", c.ffn_size},         {"max_positions", c.max_positions},
      {"dropout_rate", c.dropout_rate}, {"n_classes", c.n_classes},
  };
  meta["tokenizer"] = {{"scheme", norm_scheme_name(scheme)},
                       {"max_len", max_len}};
  meta["vocab"] = vocab_to_text(vocab);
  if (labels)
    meta["labels"] = {{"name", labels->name()},
                      {"classes", labels->classes()}};
  json manifest = json::array();
  for (const NamedParam& np : model.named_parameters())
    manifest.push_back({{"name", np.name}, {"shape", np.tensor->shape}});
  meta["weights"] = std::move(manifest);
  return meta;
}

}  // namespace

uint32_t crc32(std::string_view data) {
  return crc32_update(0xFFFFFFFFu, data.data(), data.size()) ^ 0xFFFFFFFFu;
}

void save_model(const EncoderModel& model, const Vocabulary& vocab,
                NormScheme scheme, size_t max_len,
                const std::optional<LabelSet>& labels,
                const std::string& path) {
  const std::string meta =
      metadata_json(model, vocab, scheme, max_len, labels).dump();

  std::string out;
  out.append(kMagic, 4);
  append_u32(out, static_cast<uint32_t>(meta.size()));
  out += meta;
  for (const NamedParam& np : model.named_parameters())
    out.append(reinterpret_cast<const char*>(np.tensor->data.data()),
               np.tensor->data.size() * sizeof(float));
  append_u32(out, crc32(out));

  std::ofstream file(path, std::ios::binary);
  if (!file) throw data_error("cannot write file: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file.flush()) throw data_error("failed writing file: " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw data_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << file.rdbuf();
  const std::string raw = buf.str();

  if (raw.size() < 12 || std::memcmp(raw.data(), kMagic, 4) != 0)
    throw data_error(path + " is not a model container");
  uint32_t stored_crc;
  std::memcpy(&stored_crc, raw.data() + raw.size() - 4, 4);
  if (crc32(std::string_view(raw).substr(0, raw.size() - 4)) != stored_crc)
    throw data_error(path + ": checksum mismatch, file is corrupt");

  uint32_t meta_len;
  std::memcpy(&meta_len, raw.data() + 4, 4);
  if (8 + size_t{meta_len} > raw.size() - 4)
    throw data_error(path + ": metadata length overruns the file");

  json meta;
  try {
    meta = json::parse(raw.substr(8, meta_len));
  } catch (const json::exception& e) {
    throw data_error(path + ": bad metadata: " + e.what());
  }

  try {
    const HeadKind kind =
        head_kind_from_name(meta.at("kind").get<std::string>());
    const json& jc = meta.at("config");
    ModelConfig config;
    config.vocab_size = jc.at("vocab_size").get<size_t>();
    config.hidden_size = jc.at("hidden_size").get<size_t>();
    config.n_layers = jc.at("n_layers").get<size_t>();
    config.n_heads = jc.at("n_heads").get<size_t>();
    config.ffn_size = jc.at("ffn_size").get<size_t>();
    config.max_positions = jc.at("max_positions").get<size_t>();
    config.dropout_rate = jc.at("dropout_rate").get<float>();
    config.n_classes = jc.at("n_classes").get<size_t>();
    config.validate(kind);

    Vocabulary vocab =
        vocab_from_text(meta.at("vocab").get<std::string>());
    if (vocab.size() != config.vocab_size)
      throw data_error(path + ": vocabulary has " +
                       std::to_string(vocab.size()) +
                       " tokens but the model was built for " +
                       std::to_string(config.vocab_size));

    const json& jt = meta.at("tokenizer");
    const NormScheme scheme =
        norm_scheme_from_name(jt.at("scheme").get<std::string>());
    const size_t max_len = jt.at("max_len").get<size_t>();
    if (max_len < 3 || max_len > config.max_positions)
      throw data_error(path + ": tokenizer max_len " +
                       std::to_string(max_len) +
                       " is invalid for max_positions " +
                       std::to_string(config.max_positions));

    std::optional<LabelSet> labels;
    if (meta.contains("labels")) {
      const json& jl = meta.at("labels");
      labels = LabelSet::custom(
          jl.at("name").get<std::string>(),
          jl.at("classes").get<std::vector<std::string>>());
    }
    if (kind == HeadKind::kClassifier) {
      if (!labels)
        throw data_error(path + ": classifier model carries no label set");
      if (labels->size() != config.n_classes)
        throw data_error(path + ": label set size " +
                         std::to_string(labels->size()) +
                         " does not match n_classes " +
                         std::to_string(config.n_classes));
    }

    EncoderModel model(config, kind, 0);
    std::vector<NamedParam> params = model.named_parameters();
    const json& manifest = meta.at("weights");
    if (!manifest.is_array() || manifest.size() != params.size())
      throw data_error(path + ": weight manifest does not match the model");
    size_t offset = 8 + meta_len;
    const size_t payload_end = raw.size() - 4;
    for (size_t i = 0; i < params.size(); ++i) {
      const json& entry = manifest.at(i);
      if (entry.at("name").get<std::string>() != params[i].name ||
          entry.at("shape").get<std::vector<size_t>>() !=
              params[i].tensor->shape)
        throw data_error(path + ": weight manifest entry " +
                         std::to_string(i) + " does not match parameter " +
                         params[i].name);
      const size_t bytes = params[i].tensor->data.size() * sizeof(float);
      if (offset + bytes > payload_end)
        throw data_error(path + ": weight payload is truncated");
      std::memcpy(params[i].tensor->data.data(), raw.data() + offset, bytes);
      offset += bytes;
    }
    if (offset != payload_end)
      throw data_error(path + ": trailing bytes after the weight payload");

    return LoadedModel{std::move(model), std::move(vocab), scheme, max_len,
                       std::move(labels)};
  } catch (const json::exception& e) {
    throw data_error(path + ": bad metadata: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw data_error(path + ": bad metadata: " + e.what());
  } catch (const config_error& e) {
    throw data_error(path + ": bad model config: " + e.what());
  }
}

}  // namespace nmc
