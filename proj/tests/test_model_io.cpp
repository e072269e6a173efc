#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nmc/bpe.hpp"
#include "nmc/error.hpp"
#include "nmc/model_io.hpp"
#include "nmc/normalize.hpp"
#include "nmc/transformer.hpp"
#include "testutil.hpp"

using nmc::EncoderModel;
using nmc::HeadKind;
using nmc::ModelConfig;
using nmc::NormScheme;
using nmc::Vocabulary;

namespace {

Vocabulary small_vocab() {
  std::vector<nmc::NormalizedName> corpus(
      3, nmc::NormalizedName{"abab abab", NormScheme::kCaseMarked});
  return nmc::train_bpe(corpus, 16);
}

ModelConfig config_for(const Vocabulary& vocab, size_t classes) {
  ModelConfig c;
  c.vocab_size = vocab.size();
  c.hidden_size = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.ffn_size = 16;
  c.max_positions = 12;
  c.n_classes = classes;
  return c;
}

}  // namespace

TEST_CASE("crc32 reference values") {
  CHECK(nmc::crc32("123456789") == 0xCBF43926u);
  CHECK(nmc::crc32("") == 0u);
  CHECK(nmc::crc32("a") == 0xE8B7BE43u);
}

TEST_CASE("model containers round-trip") {
  Vocabulary vocab = small_vocab();
  EncoderModel model(config_for(vocab, 3), HeadKind::kClassifier, 17);
  nmc::LabelSet labels = nmc::LabelSet::custom("trio", {"x", "y", "z"});

  testutil::TempDir dir;
  const std::string path = dir.file("model.nmc");
  nmc::save_model(model, vocab, NormScheme::kCaseMarked, 10, labels, path);
  nmc::LoadedModel loaded = nmc::load_model(path);

  CHECK(loaded.scheme == NormScheme::kCaseMarked);
  CHECK(loaded.max_len == 10);
  REQUIRE(loaded.labels.has_value());
  CHECK(loaded.labels->classes() == labels.classes());
  CHECK(loaded.labels->name() == "trio");
  CHECK(loaded.vocab.tokens == vocab.tokens);
  CHECK(loaded.model.config().hidden_size == 8);
  CHECK(loaded.model.head_kind() == HeadKind::kClassifier);

  auto a = model.named_parameters();
  auto b = loaded.model.named_parameters();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].tensor->data == b[i].tensor->data);
  }

  nmc::TokenSequence seq = nmc::encode(
      nmc::normalize_case_marked("ab", "ab"), vocab, 10);
  CHECK(model.classify(seq) == loaded.model.classify(seq));
}

TEST_CASE("mlm containers carry no labels") {
  Vocabulary vocab = small_vocab();
  EncoderModel model(config_for(vocab, 0), HeadKind::kMlm, 4);
  testutil::TempDir dir;
  const std::string path = dir.file("lm.nmc");
  nmc::save_model(model, vocab, NormScheme::kUnderscoreLower, 12,
                  std::nullopt, path);
  nmc::LoadedModel loaded = nmc::load_model(path);
  CHECK(loaded.model.head_kind() == HeadKind::kMlm);
  CHECK(!loaded.labels.has_value());
  CHECK(loaded.scheme == NormScheme::kUnderscoreLower);
}

TEST_CASE("save then save again is byte-identical") {
  Vocabulary vocab = small_vocab();
  EncoderModel model(config_for(vocab, 2), HeadKind::kClassifier, 8);
  nmc::LabelSet labels = nmc::LabelSet::custom("pair", {"p", "q"});
  testutil::TempDir dir;
  nmc::save_model(model, vocab, NormScheme::kCaseMarked, 8, labels,
                  dir.file("one.nmc"));
  nmc::save_model(model, vocab, NormScheme::kCaseMarked, 8, labels,
                  dir.file("two.nmc"));
  CHECK(testutil::read_file(dir.file("one.nmc")) ==
        testutil::read_file(dir.file("two.nmc")));
}

TEST_CASE("corrupt containers are rejected") {
  Vocabulary vocab = small_vocab();
  EncoderModel model(config_for(vocab, 2), HeadKind::kClassifier, 8);
  nmc::LabelSet labels = nmc::LabelSet::custom("pair", {"p", "q"});
  testutil::TempDir dir;
  const std::string path = dir.file("model.nmc");
  nmc::save_model(model, vocab, NormScheme::kCaseMarked, 8, labels, path);
  const std::string bytes = testutil::read_file(path);

  SUBCASE("truncated") {
    testutil::write_file(path, bytes.substr(0, bytes.size() - 9));
    CHECK_THROWS_AS(nmc::load_model(path), nmc::data_error);
  }
  SUBCASE("tampered weight byte") {
    std::string evil = bytes;
    evil[evil.size() / 2] ^= 0x20;
    testutil::write_file(path, evil);
    CHECK_THROWS_WITH_AS(nmc::load_model(path),
                         doctest::Contains("checksum"), nmc::data_error);
  }
  SUBCASE("tampered metadata byte") {
    std::string evil = bytes;
    evil[8] ^= 0x01;
    testutil::write_file(path, evil);
    CHECK_THROWS_AS(nmc::load_model(path), nmc::data_error);
  }
  SUBCASE("wrong magic") {
    std::string evil = bytes;
    evil[0] = 'X';
    testutil::write_file(path, evil);
    CHECK_THROWS_WITH_AS(nmc::load_model(path),
                         doctest::Contains("not a model container"),
                         nmc::data_error);
  }
  SUBCASE("trailing garbage") {
    testutil::write_file(path, bytes + "extra");
    CHECK_THROWS_AS(nmc::load_model(path), nmc::data_error);
  }
  SUBCASE("empty file") {
    testutil::write_file(path, "");
    CHECK_THROWS_AS(nmc::load_model(path), nmc::data_error);
  }
}

TEST_CASE("loading a missing path fails cleanly") {
  CHECK_THROWS_AS(nmc::load_model("/nonexistent/model.nmc"), nmc::data_error);
}
