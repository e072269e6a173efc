#include <cmath>
#include <cstring>
#include <map>
#include <set>

#include "doctest.h"
#include "nmc/bpe.hpp"
#include "nmc/error.hpp"
#include "nmc/ops.hpp"
#include "nmc/transformer.hpp"
#include "testutil.hpp"

using nmc::Batch;
using nmc::EncoderModel;
using nmc::HeadKind;
using nmc::ModelConfig;
using nmc::Rng;
using nmc::TokenSequence;

namespace {

ModelConfig tiny_config(size_t vocab = 12, size_t classes = 0) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.hidden_size = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.ffn_size = 16;
  c.max_positions = 10;
  c.dropout_rate = 0.1f;
  c.n_classes = classes;
  return c;
}

TokenSequence make_seq(std::vector<int32_t> body, size_t max_len,
                       size_t vocab) {
  TokenSequence seq;
  seq.ids.push_back(2);
  for (int32_t id : body) {
    REQUIRE(id < int32_t(vocab));
    seq.ids.push_back(id);
  }
  seq.ids.push_back(3);
  seq.length = seq.ids.size();
  seq.ids.resize(max_len, 0);
  seq.mask.assign(max_len, 0);
  std::fill(seq.mask.begin(), seq.mask.begin() + seq.length, 1);
  return seq;
}

}  // namespace

TEST_CASE("model config validation") {
  ModelConfig c = tiny_config();
  CHECK_NOTHROW(c.validate(HeadKind::kMlm));
  c.n_heads = 3;  // 8 % 3 != 0
  CHECK_THROWS_AS(c.validate(HeadKind::kMlm), nmc::config_error);
  c = tiny_config();
  c.vocab_size = 5;
  CHECK_THROWS_AS(c.validate(HeadKind::kMlm), nmc::config_error);
  c = tiny_config();
  c.dropout_rate = 1.0f;
  CHECK_THROWS_AS(c.validate(HeadKind::kMlm), nmc::config_error);
  c = tiny_config();
  CHECK_THROWS_AS(c.validate(HeadKind::kClassifier), nmc::config_error);
  c.n_classes = 2;
  CHECK_NOTHROW(c.validate(HeadKind::kClassifier));
  c.n_layers = 0;
  CHECK_THROWS_AS(c.validate(HeadKind::kClassifier), nmc::config_error);
}

TEST_CASE("parameter_count matches a hand tally") {
  ModelConfig c = tiny_config(12, 3);
  // embeddings: 12*8 + 10*8 + 8 + 8 = 192
  // layer: 4*(64+8) + 16 + (8*16+16+16*8+8) + 16 = 600... spelled out below
  const size_t emb = 12 * 8 + 10 * 8 + 2 * 8;
  const size_t layer = 4 * (8 * 8 + 8) + 2 * 8 + (8 * 16 + 16 + 16 * 8 + 8) +
                       2 * 8;
  const size_t mlm_head = 8 * 8 + 8 + 2 * 8 + 8 * 12 + 12;
  const size_t cls_head = 8 * 8 + 8 + 8 * 3 + 3;
  CHECK(nmc::parameter_count(c, HeadKind::kMlm) == emb + layer + mlm_head);
  CHECK(nmc::parameter_count(c, HeadKind::kClassifier) ==
        emb + layer + cls_head);

  EncoderModel model(c, HeadKind::kClassifier, 1);
  size_t total = 0;
  for (const auto& np : model.named_parameters()) total += np.tensor->numel();
  CHECK(total == nmc::parameter_count(c, HeadKind::kClassifier));
}

TEST_CASE("named parameter order is stable") {
  EncoderModel model(tiny_config(12, 2), HeadKind::kClassifier, 1);
  std::vector<std::string> names;
  for (const auto& np : model.named_parameters()) names.push_back(np.name);
  const std::vector<std::string> want = {
      "embeddings.token",        "embeddings.position",
      "embeddings.norm.gamma",   "embeddings.norm.beta",
      "layer.0.attn.q.weight",   "layer.0.attn.q.bias",
      "layer.0.attn.k.weight",   "layer.0.attn.k.bias",
      "layer.0.attn.v.weight",   "layer.0.attn.v.bias",
      "layer.0.attn.out.weight", "layer.0.attn.out.bias",
      "layer.0.attn.norm.gamma", "layer.0.attn.norm.beta",
      "layer.0.ffn.in.weight",   "layer.0.ffn.in.bias",
      "layer.0.ffn.out.weight",  "layer.0.ffn.out.bias",
      "layer.0.ffn.norm.gamma",  "layer.0.ffn.norm.beta",
      "classifier.dense.weight", "classifier.dense.bias",
      "classifier.proj.weight",  "classifier.proj.bias"};
  CHECK(names == want);
}

TEST_CASE("initialization is seeded and truncated") {
  EncoderModel a(tiny_config(12, 2), HeadKind::kClassifier, 42);
  EncoderModel b(tiny_config(12, 2), HeadKind::kClassifier, 42);
  EncoderModel c(tiny_config(12, 2), HeadKind::kClassifier, 43);

  auto pa = a.named_parameters();
  auto pb = b.named_parameters();
  auto pc = c.named_parameters();
  bool same_ab = true, same_ac = true;
  for (size_t i = 0; i < pa.size(); ++i) {
    same_ab = same_ab && pa[i].tensor->data == pb[i].tensor->data;
    same_ac = same_ac && pa[i].tensor->data == pc[i].tensor->data;
  }
  CHECK(same_ab);
  CHECK(!same_ac);

  std::map<std::string, nmc::TensorPtr> params;
  for (const auto& np : pa) params[np.name] = np.tensor;
  for (float v : params.at("embeddings.token")->data)
    CHECK(std::fabs(v) <= 0.04f);  // clipped at two sigma
  for (float v : params.at("layer.0.attn.q.bias")->data) CHECK(v == 0.0f);
  for (float v : params.at("embeddings.norm.gamma")->data) CHECK(v == 1.0f);
  for (float v : params.at("embeddings.norm.beta")->data) CHECK(v == 0.0f);
  float spread = 0.0f;
  for (float v : params.at("embeddings.token")->data)
    spread = std::max(spread, std::fabs(v));
  CHECK(spread > 0.01f);
}

TEST_CASE("batch geometry") {
  TokenSequence a = make_seq({5, 6}, 6, 12);
  TokenSequence b = make_seq({7}, 6, 12);
  Batch batch = Batch::from_sequences({a, b});
  CHECK(batch.batch_size == 2);
  CHECK(batch.seq_len == 6);
  CHECK(batch.ids.size() == 12);
  CHECK(batch.key_mask[0] == 1);
  CHECK(batch.key_mask[5] == 0);

  TokenSequence c = make_seq({5}, 4, 12);
  CHECK_THROWS_AS(Batch::from_sequences({a, c}), nmc::op_error);
  CHECK_THROWS_AS(Batch::from_sequences({}), nmc::op_error);
}

TEST_CASE("mask_batch summary statistics") {
  Rng rng(99);
  std::vector<TokenSequence> seqs;
  for (int i = 0; i < 400; ++i) {
    std::vector<int32_t> body;
    for (int t = 0; t < 20; ++t) body.push_back(5 + int32_t(rng.below(95)));
    seqs.push_back(make_seq(body, 24, 100));
  }
  Batch batch = Batch::from_sequences(seqs);
  Rng mask_rng(7);
  nmc::MaskedBatch masked = nmc::mask_batch(batch, 0.15f, 100, mask_rng);

  size_t selected = 0, to_mask = 0, to_random = 0, kept = 0, eligible = 0;
  for (size_t i = 0; i < batch.ids.size(); ++i) {
    const bool special = batch.ids[i] < 5;
    const bool pad = batch.key_mask[i] == 0;
    if (!special && !pad) ++eligible;
    if (masked.targets[i] == -1) {
      CHECK(masked.batch.ids[i] == batch.ids[i]);
      continue;
    }
    CHECK(!special);
    CHECK(!pad);
    ++selected;
    if (masked.batch.ids[i] == nmc::Vocabulary::kMaskId)
      ++to_mask;
    else if (masked.batch.ids[i] == batch.ids[i])
      ++kept;
    else
      ++to_random;
    CHECK(masked.batch.ids[i] >= 0);
    if (masked.batch.ids[i] != nmc::Vocabulary::kMaskId)
      CHECK(masked.batch.ids[i] >= 5);  // random draws skip specials
  }
  CHECK(masked.n_selected == selected);
  const double rate = double(selected) / double(eligible);
  CHECK(rate == doctest::Approx(0.15).epsilon(0.07));
  CHECK(double(to_mask) / double(selected) == doctest::Approx(0.8).epsilon(0.04));
  CHECK(double(to_random) / double(selected) ==
        doctest::Approx(0.1).epsilon(0.25));
  CHECK(double(kept) / double(selected) == doctest::Approx(0.1).epsilon(0.25));

  CHECK_THROWS_AS(nmc::mask_batch(batch, 0.0f, 100, mask_rng),
                  nmc::config_error);
  CHECK_THROWS_AS(nmc::mask_batch(batch, 0.15f, 5, mask_rng),
                  nmc::config_error);
}

TEST_CASE("encode rejects sequences past max_positions") {
  EncoderModel model(tiny_config(12, 2), HeadKind::kClassifier, 1);
  TokenSequence s = make_seq({5, 6}, 12, 12);  // max_positions is 10
  nmc::Graph g(false);
  Rng rng(0);
  Batch batch = Batch::from_sequences({s});
  CHECK_THROWS_AS(model.encode(g, batch, rng, false), nmc::config_error);
}

TEST_CASE("padding length does not change the CLS logits") {
  EncoderModel model(tiny_config(12, 3), HeadKind::kClassifier, 5);
  TokenSequence short_seq = make_seq({5, 6, 7}, 6, 12);
  TokenSequence long_seq = make_seq({5, 6, 7}, 10, 12);

  nmc::Graph g(false);
  Rng rng(0);
  auto a = model.classify_logits(g, Batch::from_sequences({short_seq}), rng,
                                 false);
  auto b = model.classify_logits(g, Batch::from_sequences({long_seq}), rng,
                                 false);
  REQUIRE(a->data.size() == b->data.size());
  for (size_t i = 0; i < a->data.size(); ++i)
    CHECK(a->data[i] == doctest::Approx(b->data[i]).epsilon(1e-5));
}

TEST_CASE("logit shapes") {
  EncoderModel lm(tiny_config(12), HeadKind::kMlm, 3);
  EncoderModel cls(tiny_config(12, 4), HeadKind::kClassifier, 3);
  TokenSequence s = make_seq({5, 6}, 8, 12);
  Batch batch = Batch::from_sequences({s, s, s});

  nmc::Graph g(false);
  Rng rng(0);
  CHECK(lm.mlm_logits(g, batch, rng, false)->shape ==
        std::vector<size_t>{24, 12});
  CHECK(cls.classify_logits(g, batch, rng, false)->shape ==
        std::vector<size_t>{3, 4});
  CHECK_THROWS_AS(lm.classifier_head(), nmc::op_error);
  CHECK_THROWS_AS(cls.mlm_head(), nmc::op_error);
}

TEST_CASE("classify returns a distribution") {
  EncoderModel model(tiny_config(12, 4), HeadKind::kClassifier, 9);
  TokenSequence s = make_seq({5, 9, 6}, 8, 12);
  std::vector<float> probs = model.classify(s);
  REQUIRE(probs.size() == 4);
  double total = 0;
  for (float p : probs) {
    CHECK(p >= 0.0f);
    total += p;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-5));

  nmc::LabelSet labels =
      nmc::LabelSet::custom("quad", {"w", "x", "y", "z"});
  nmc::Prediction pred = nmc::classify(model, s, labels);
  CHECK(pred.probabilities == probs);
  nmc::LabelSet wrong = nmc::LabelSet::custom("pair", {"w", "x"});
  CHECK_THROWS_AS(nmc::classify(model, s, wrong), nmc::config_error);
}

TEST_CASE("training mode dropout changes outputs, eval mode does not") {
  ModelConfig c = tiny_config(12, 3);
  c.dropout_rate = 0.5f;
  EncoderModel model(c, HeadKind::kClassifier, 11);
  TokenSequence s = make_seq({5, 6, 7, 8}, 8, 12);
  Batch batch = Batch::from_sequences({s});

  nmc::Graph g(false);
  Rng r1(1), r2(2), r3(3);
  auto train1 = model.classify_logits(g, batch, r1, true);
  auto train2 = model.classify_logits(g, batch, r2, true);
  auto eval1 = model.classify_logits(g, batch, r3, false);
  auto eval2 = model.classify_logits(g, batch, r3, false);
  CHECK(train1->data != train2->data);
  CHECK(eval1->data == eval2->data);
}

TEST_CASE("classifier initialized from an LM shares encoder outputs exactly") {
  ModelConfig c = tiny_config(16);
  EncoderModel lm(c, HeadKind::kMlm, 21);
  EncoderModel cls = nmc::init_classifier_from_lm(lm, 3, 99);
  CHECK(cls.head_kind() == HeadKind::kClassifier);
  CHECK(cls.config().n_classes == 3);

  Rng data_rng(5);
  for (int round = 0; round < 5; ++round) {
    std::vector<int32_t> body;
    for (int t = 0, n = 1 + int(data_rng.below(6)); t < n; ++t)
      body.push_back(5 + int32_t(data_rng.below(11)));
    TokenSequence s = make_seq(body, 9, 16);
    Batch batch = Batch::from_sequences({s});
    nmc::Graph g(false);
    Rng rng(0);
    auto a = lm.encode(g, batch, rng, false);
    auto b = cls.encode(g, batch, rng, false);
    REQUIRE(a->data.size() == b->data.size());
    CHECK(std::memcmp(a->data.data(), b->data.data(),
                      a->data.size() * sizeof(float)) == 0);
  }
}
