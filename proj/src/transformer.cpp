#include "nmc/transformer.hpp"

#include <algorithm>
#include <cstring>
#include <map>

#include "nmc/error.hpp"

namespace nmc {

const char* head_kind_name(HeadKind kind) {
  switch (kind) {
    case HeadKind::kMlm:
      return "mlm";
    case HeadKind::kClassifier:
      return "classifier";
  }
  throw std::invalid_argument("unknown head kind");
}

HeadKind head_kind_from_name(std::string_view name) {
  if (name == "mlm") return HeadKind::kMlm;
  if (name == "classifier") return HeadKind::kClassifier;
  throw std::invalid_argument("unknown head kind: " + std::string(name));
}

void ModelConfig::validate(HeadKind kind) const {
  auto positive = [](size_t v, const char* what) {
    if (v == 0)
      throw config_error(std::string(what) + " must be positive");
  };
  positive(hidden_size, "hidden_size");
  positive(n_layers, "n_layers");
  positive(n_heads, "n_heads");
  positive(ffn_size, "ffn_size");
  positive(max_positions, "max_positions");
  if (vocab_size <= Vocabulary::kNumSpecials)
    throw config_error("vocab_size must exceed the " +
                       std::to_string(Vocabulary::kNumSpecials) +
                       " special tokens, got " + std::to_string(vocab_size));
  if (hidden_size % n_heads != 0)
    throw config_error("hidden_size " + std::to_string(hidden_size) +
                       " is not divisible by n_heads " +
                       std::to_string(n_heads));
  if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f))
    throw config_error("dropout_rate must be in [0,1), got " +
                       std::to_string(dropout_rate));
  if (kind == HeadKind::kClassifier && n_classes < 2)
    throw config_error("classifier needs at least 2 classes, got " +
                       std::to_string(n_classes));
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.hidden_size = 64;
  c.n_layers = 2;
  c.n_heads = 2;
  c.ffn_size = 256;
  c.max_positions = 64;
  return c;
}

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.hidden_size = 768;
  c.n_layers = 6;
  c.n_heads = 12;
  c.ffn_size = 3072;
  c.max_positions = 512;
  return c;
}

size_t parameter_count(const ModelConfig& c, HeadKind kind) {
  const size_t h = c.hidden_size, f = c.ffn_size, v = c.vocab_size;
  size_t n = v * h + c.max_positions * h + 2 * h;  // embeddings + norm
  const size_t per_layer = 4 * (h * h + h)         // q, k, v, out
                           + 2 * h                 // attention norm
                           + h * f + f + f * h + h  // ffn
                           + 2 * h;                // ffn norm
  n += c.n_layers * per_layer;
  if (kind == HeadKind::kMlm)
    n += h * h + h + 2 * h + h * v + v;
  else
    n += h * h + h + h * c.n_classes + c.n_classes;
  return n;
}

Batch Batch::from_sequences(const std::vector<TokenSequence>& seqs) {
  if (seqs.empty()) throw op_error("batch built from zero sequences");
  Batch b;
  b.batch_size = seqs.size();
  b.seq_len = seqs[0].ids.size();
  b.ids.reserve(b.batch_size * b.seq_len);
  b.key_mask.reserve(b.batch_size * b.seq_len);
  for (const TokenSequence& s : seqs) {
    if (s.ids.size() != b.seq_len || s.mask.size() != b.seq_len)
      throw op_error("batch sequences have mixed lengths");
    b.ids.insert(b.ids.end(), s.ids.begin(), s.ids.end());
    b.key_mask.insert(b.key_mask.end(), s.mask.begin(), s.mask.end());
  }
  return b;
}

MaskedBatch mask_batch(const Batch& batch, float mask_rate, size_t vocab_size,
                       Rng& rng) {
  if (!(mask_rate > 0.0f && mask_rate < 1.0f))
    throw config_error("mask_rate must be in (0,1), got " +
                       std::to_string(mask_rate));
  if (vocab_size <= Vocabulary::kNumSpecials)
    throw config_error("vocabulary has no maskable tokens");

  MaskedBatch out;
  out.batch = batch;
  out.targets.assign(batch.ids.size(), -1);
  const auto n_plain =
      static_cast<uint64_t>(vocab_size - Vocabulary::kNumSpecials);
  for (size_t i = 0; i < batch.ids.size(); ++i) {
    if (batch.key_mask[i] == 0) continue;
    const int32_t id = batch.ids[i];
    if (id < static_cast<int32_t>(Vocabulary::kNumSpecials)) continue;
    if (rng.uniform() >= mask_rate) continue;
    out.targets[i] = id;
    ++out.n_selected;
    const double roll = rng.uniform();
    if (roll < 0.8) {
      out.batch.ids[i] = Vocabulary::kMaskId;
    } else if (roll < 0.9) {
      out.batch.ids[i] = static_cast<int32_t>(Vocabulary::kNumSpecials +
                                              rng.below(n_plain));
    }  // else: keep the original token
  }
  return out;
}

namespace {

void fill_normal(const TensorPtr& t, Rng& rng) {
  for (float& v : t->data) v = rng.truncated_normal(0.02f);
}

LinearParam make_linear(size_t in, size_t out, Rng& rng) {
  LinearParam p;
  p.weight = make_tensor({in, out}, true);
  fill_normal(p.weight, rng);
  p.bias = make_tensor({out}, true);
  return p;
}

NormParam make_norm(size_t h) {
  NormParam p;
  p.gamma = make_tensor({h}, true);
  std::fill(p.gamma->data.begin(), p.gamma->data.end(), 1.0f);
  p.beta = make_tensor({h}, true);
  return p;
}

TensorPtr linear(Graph& g, const TensorPtr& x, const LinearParam& p) {
  return add(g, matmul(g, x, p.weight), p.bias);
}

}  // namespace

EncoderModel::EncoderModel(const ModelConfig& config, HeadKind kind,
                           uint64_t seed)
    : config_(config), kind_(kind) {
  config_.validate(kind_);
  Rng rng(seed);
  const size_t h = config_.hidden_size;

  token_embeddings_ = make_tensor({config_.vocab_size, h}, true);
  fill_normal(token_embeddings_, rng);
  position_embeddings_ = make_tensor({config_.max_positions, h}, true);
  fill_normal(position_embeddings_, rng);
  embedding_norm_ = make_norm(h);

  layers_.reserve(config_.n_layers);
  for (size_t i = 0; i < config_.n_layers; ++i) {
    LayerParams lp;
    lp.q = make_linear(h, h, rng);
    lp.k = make_linear(h, h, rng);
    lp.v = make_linear(h, h, rng);
    lp.attn_out = make_linear(h, h, rng);
    lp.attn_norm = make_norm(h);
    lp.ffn_in = make_linear(h, config_.ffn_size, rng);
    lp.ffn_out = make_linear(config_.ffn_size, h, rng);
    lp.ffn_norm = make_norm(h);
    layers_.push_back(std::move(lp));
  }

  if (kind_ == HeadKind::kMlm) {
    MlmHeadParams head;
    head.dense = make_linear(h, h, rng);
    head.norm = make_norm(h);
    head.proj = make_linear(h, config_.vocab_size, rng);
    mlm_ = std::move(head);
  } else {
    ClassifierHeadParams head;
    head.dense = make_linear(h, h, rng);
    head.proj = make_linear(h, config_.n_classes, rng);
    classifier_ = std::move(head);
  }
}

std::vector<NamedParam> EncoderModel::named_parameters() const {
  std::vector<NamedParam> out;
  out.push_back({"embeddings.token", token_embeddings_});
  out.push_back({"embeddings.position", position_embeddings_});
  out.push_back({"embeddings.norm.gamma", embedding_norm_.gamma});
  out.push_back({"embeddings.norm.beta", embedding_norm_.beta});
  for (size_t i = 0; i < layers_.size(); ++i) {
    const LayerParams& lp = layers_[i];
    const std::string p = "layer." + std::to_string(i) + ".";
    auto lin = [&](const std::string& name, const LinearParam& lp2) {
      out.push_back({p + name + ".weight", lp2.weight});
      out.push_back({p + name + ".bias", lp2.bias});
    };
    lin("attn.q", lp.q);
    lin("attn.k", lp.k);
    lin("attn.v", lp.v);
    lin("attn.out", lp.attn_out);
    out.push_back({p + "attn.norm.gamma", lp.attn_norm.gamma});
    out.push_back({p + "attn.norm.beta", lp.attn_norm.beta});
    lin("ffn.in", lp.ffn_in);
    lin("ffn.out", lp.ffn_out);
    out.push_back({p + "ffn.norm.gamma", lp.ffn_norm.gamma});
    out.push_back({p + "ffn.norm.beta", lp.ffn_norm.beta});
  }
  if (mlm_) {
    out.push_back({"mlm.dense.weight", mlm_->dense.weight});
    out.push_back({"mlm.dense.bias", mlm_->dense.bias});
    out.push_back({"mlm.norm.gamma", mlm_->norm.gamma});
    out.push_back({"mlm.norm.beta", mlm_->norm.beta});
    out.push_back({"mlm.proj.weight", mlm_->proj.weight});
    out.push_back({"mlm.proj.bias", mlm_->proj.bias});
  }
  if (classifier_) {
    out.push_back({"classifier.dense.weight", classifier_->dense.weight});
    out.push_back({"classifier.dense.bias", classifier_->dense.bias});
    out.push_back({"classifier.proj.weight", classifier_->proj.weight});
    out.push_back({"classifier.proj.bias", classifier_->proj.bias});
  }
  return out;
}

std::vector<TensorPtr> EncoderModel::parameters() const {
  std::vector<TensorPtr> out;
  for (const NamedParam& np : named_parameters()) out.push_back(np.tensor);
  return out;
}

TensorPtr EncoderModel::encode(Graph& g, const Batch& batch, Rng& rng,
                               bool training) const {
  const size_t n = batch.batch_size * batch.seq_len;
  if (batch.ids.size() != n || batch.key_mask.size() != n)
    throw op_error("batch buffers disagree with batch geometry");
  if (batch.seq_len > config_.max_positions)
    throw config_error("sequence length " + std::to_string(batch.seq_len) +
                       " exceeds max_positions " +
                       std::to_string(config_.max_positions));

  std::vector<int32_t> pos_ids(n);
  for (size_t b = 0; b < batch.batch_size; ++b)
    for (size_t t = 0; t < batch.seq_len; ++t)
      pos_ids[b * batch.seq_len + t] = static_cast<int32_t>(t);

  TensorPtr x = add(g, embedding_lookup(g, token_embeddings_, batch.ids),
                    embedding_lookup(g, position_embeddings_, pos_ids));
  x = layer_norm(g, x, embedding_norm_.gamma, embedding_norm_.beta);
  x = dropout(g, x, config_.dropout_rate, rng, training);

  for (const LayerParams& lp : layers_) {
    TensorPtr a = scaled_dot_product_attention(
        g, linear(g, x, lp.q), linear(g, x, lp.k), linear(g, x, lp.v),
        batch.key_mask, batch.batch_size, batch.seq_len, config_.n_heads,
        config_.dropout_rate, rng, training);
    a = linear(g, a, lp.attn_out);
    a = dropout(g, a, config_.dropout_rate, rng, training);
    x = layer_norm(g, add(g, x, a), lp.attn_norm.gamma, lp.attn_norm.beta);

    TensorPtr f = gelu(g, linear(g, x, lp.ffn_in));
    f = linear(g, f, lp.ffn_out);
    f = dropout(g, f, config_.dropout_rate, rng, training);
    x = layer_norm(g, add(g, x, f), lp.ffn_norm.gamma, lp.ffn_norm.beta);
  }
  return x;
}

const MlmHeadParams& EncoderModel::mlm_head() const {
  if (!mlm_) throw op_error("model has no MLM head");
  return *mlm_;
}

const ClassifierHeadParams& EncoderModel::classifier_head() const {
  if (!classifier_) throw op_error("model has no classifier head");
  return *classifier_;
}

TensorPtr EncoderModel::mlm_logits(Graph& g, const Batch& batch, Rng& rng,
                                   bool training) const {
  const MlmHeadParams& head = mlm_head();
  TensorPtr x = encode(g, batch, rng, training);
  x = gelu(g, linear(g, x, head.dense));
  x = layer_norm(g, x, head.norm.gamma, head.norm.beta);
  return linear(g, x, head.proj);
}

TensorPtr EncoderModel::mlm_loss(Graph& g, const MaskedBatch& masked, Rng& rng,
                                 bool training) const {
  return cross_entropy(g, mlm_logits(g, masked.batch, rng, training),
                       masked.targets);
}

TensorPtr EncoderModel::classify_logits(Graph& g, const Batch& batch, Rng& rng,
                                        bool training) const {
  const ClassifierHeadParams& head = classifier_head();
  TensorPtr x = encode(g, batch, rng, training);
  std::vector<int32_t> cls_rows(batch.batch_size);
  for (size_t b = 0; b < batch.batch_size; ++b)
    cls_rows[b] = static_cast<int32_t>(b * batch.seq_len);
  TensorPtr pooled = embedding_lookup(g, x, cls_rows);
  pooled = tanh_op(g, linear(g, pooled, head.dense));
  return linear(g, pooled, head.proj);
}

std::vector<float> EncoderModel::classify(const TokenSequence& seq) const {
  Graph g(false);
  Rng rng(0);
  Batch batch = Batch::from_sequences({seq});
  TensorPtr probs = softmax(g, classify_logits(g, batch, rng, false));
  return probs->data;
}

EncoderModel init_classifier_from_lm(const EncoderModel& lm, size_t n_classes,
                                     uint64_t seed) {
  ModelConfig config = lm.config();
  config.n_classes = n_classes;
  EncoderModel out(config, HeadKind::kClassifier, seed);

  std::map<std::string, TensorPtr> mine;
  for (const NamedParam& np : out.named_parameters())
    mine[np.name] = np.tensor;
  for (const NamedParam& np : lm.named_parameters()) {
    auto it = mine.find(np.name);
    if (it == mine.end()) continue;  // MLM head has no counterpart
    it->second->data = np.tensor->data;
  }
  return out;
}

Prediction classify(const EncoderModel& model, const TokenSequence& seq,
                    const LabelSet& labels) {
  if (labels.size() != model.config().n_classes)
    throw config_error("label set has " + std::to_string(labels.size()) +
                       " classes but the model expects " +
                       std::to_string(model.config().n_classes));
  return Prediction{labels, model.classify(seq)};
}

}  // namespace nmc
