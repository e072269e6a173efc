#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmc/bpe.hpp"
#include "nmc/data_ingest.hpp"
#include "nmc/ops.hpp"
#include "nmc/rng.hpp"
#include "nmc/tensor.hpp"

namespace nmc {

enum class HeadKind { kMlm, kClassifier };

const char* head_kind_name(HeadKind kind);
HeadKind head_kind_from_name(std::string_view name);

struct ModelConfig {
  size_t vocab_size = 0;
  size_t hidden_size = 64;
  size_t n_layers = 2;
  size_t n_heads = 2;
  size_t ffn_size = 256;
  size_t max_positions = 64;
  float dropout_rate = 0.1f;
  size_t n_classes = 0;  // classifier head only

  // Throws config_error on nonpositive sizes, indivisible heads, dropout
  // outside [0,1), vocab too small for the special tokens, or (classifier)
  // fewer than two classes.
  void validate(HeadKind kind) const;

  static ModelConfig desk();   // hidden 64, 2 layers, 2 heads, ffn 256
  static ModelConfig full();   // hidden 768, 6 layers, 12 heads, ffn 3072
};

size_t parameter_count(const ModelConfig& config, HeadKind kind);

struct NamedParam {
  std::string name;
  TensorPtr tensor;
};

// Fixed-length batch: token ids and the attention key mask, row-major
// [batch * seq_len].
struct Batch {
  size_t batch_size = 0;
  size_t seq_len = 0;
  std::vector<int32_t> ids;
  std::vector<int32_t> key_mask;

  static Batch from_sequences(const std::vector<TokenSequence>& seqs);
};

struct MaskedBatch {
  Batch batch;
  // Original id at each masked position, -1 elsewhere.
  std::vector<int32_t> targets;
  size_t n_selected = 0;
};

// Independent per-position selection at mask_rate over non-special unpadded
// tokens; selected positions become [MASK] 80% of the time, a random
// non-special token 10%, and stay unchanged 10%. Throws config_error when
// mask_rate is outside (0,1) or the vocabulary has no maskable tokens.
MaskedBatch mask_batch(const Batch& batch, float mask_rate, size_t vocab_size,
                       Rng& rng);

struct Prediction {
  LabelSet labels;
  std::vector<float> probabilities;
};

struct LinearParam {
  TensorPtr weight;  // [in, out]
  TensorPtr bias;    // [out]
};

struct NormParam {
  TensorPtr gamma;
  TensorPtr beta;
};

struct LayerParams {
  LinearParam q, k, v, attn_out;
  NormParam attn_norm;
  LinearParam ffn_in, ffn_out;
  NormParam ffn_norm;
};

struct MlmHeadParams {
  LinearParam dense;
  NormParam norm;
  LinearParam proj;  // [hidden, vocab]
};

struct ClassifierHeadParams {
  LinearParam dense;
  LinearParam proj;  // [hidden, n_classes]
};

// Post-layer-norm encoder: token + position embeddings -> layer norm ->
// dropout, then per layer self-attention and feed-forward blocks, each with
// a residual connection and layer norm.
class EncoderModel {
 public:
  // Weights drawn from a seeded truncated normal (sigma 0.02, clipped at two
  // sigma), biases zero, norm scales one.
  EncoderModel(const ModelConfig& config, HeadKind kind, uint64_t seed);

  const ModelConfig& config() const { return config_; }
  HeadKind head_kind() const { return kind_; }

  // Canonical order; serialization and the optimizer both follow it.
  std::vector<NamedParam> named_parameters() const;
  std::vector<TensorPtr> parameters() const;

  // Encoder output [batch * seq_len, hidden].
  TensorPtr encode(Graph& g, const Batch& batch, Rng& rng,
                   bool training) const;

  // [batch * seq_len, vocab]; model must carry the MLM head.
  TensorPtr mlm_logits(Graph& g, const Batch& batch, Rng& rng,
                       bool training) const;
  TensorPtr mlm_loss(Graph& g, const MaskedBatch& masked, Rng& rng,
                     bool training) const;

  // [batch, n_classes] read at the [CLS] position; classifier head only.
  TensorPtr classify_logits(Graph& g, const Batch& batch, Rng& rng,
                            bool training) const;

  // Eval-mode class probabilities for one sequence.
  std::vector<float> classify(const TokenSequence& seq) const;

  const MlmHeadParams& mlm_head() const;
  const ClassifierHeadParams& classifier_head() const;

 private:
  ModelConfig config_;
  HeadKind kind_;
  TensorPtr token_embeddings_;     // [vocab, hidden]
  TensorPtr position_embeddings_;  // [max_positions, hidden]
  NormParam embedding_norm_;
  std::vector<LayerParams> layers_;
  std::optional<MlmHeadParams> mlm_;
  std::optional<ClassifierHeadParams> classifier_;
};

// Copies every encoder weight verbatim; the classification head is freshly
// initialized from the seed. Throws config_error when n_classes < 2.
EncoderModel init_classifier_from_lm(const EncoderModel& lm, size_t n_classes,
                                     uint64_t seed);

// Throws config_error when labels.size() != n_classes.
Prediction classify(const EncoderModel& model, const TokenSequence& seq,
                    const LabelSet& labels);

}  // namespace nmc
