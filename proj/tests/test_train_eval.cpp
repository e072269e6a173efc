#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "nmc/bpe.hpp"
#include "nmc/error.hpp"
#include "nmc/rng.hpp"
#include "nmc/train_eval.hpp"
#include "nmc/transformer.hpp"
#include "oracle_metrics.hpp"
#include "testutil.hpp"

using nmc::DatasetSplit;
using nmc::EncoderModel;
using nmc::HeadKind;
using nmc::LabelSet;
using nmc::MetricsReport;
using nmc::ModelConfig;
using nmc::NameRecord;
using nmc::NormalizedName;
using nmc::NormScheme;
using nmc::TrainConfig;
using nmc::Vocabulary;

namespace {

std::vector<NormalizedName> letter_corpus() {
  std::vector<NormalizedName> corpus;
  nmc::Rng rng(5);
  for (int i = 0; i < 60; ++i) {
    std::string first, last;
    for (int j = 0; j < 4; ++j) first += char('a' + rng.below(8));
    for (int j = 0; j < 5; ++j) last += char('a' + rng.below(8));
    corpus.push_back(nmc::normalize_underscore(first, last));
  }
  return corpus;
}

ModelConfig tiny_config(size_t vocab_size, size_t n_classes) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  c.hidden_size = 16;
  c.n_layers = 1;
  c.n_heads = 2;
  c.ffn_size = 32;
  c.max_positions = 16;
  c.n_classes = n_classes;
  return c;
}

TrainConfig tiny_train() {
  TrainConfig t;
  t.n_epochs = 2;
  t.batch_size = 16;
  t.learning_rate = 1e-3f;
  t.weight_decay = 1e-4f;
  t.seed = 7;
  t.max_len = 12;
  return t;
}

// Two classes with disjoint letter inventories.
DatasetSplit toy_split() {
  DatasetSplit split;
  nmc::Rng rng(11);
  for (int i = 0; i < 96; ++i) {
    NameRecord r;
    const char base = i % 2 == 0 ? 'a' : 'e';
    r.label_id = i % 2;
    for (int j = 0; j < 4; ++j) r.first_name += char(base + rng.below(4));
    for (int j = 0; j < 5; ++j) r.last_name += char(base + rng.below(4));
    (i % 6 == 0 ? split.test : split.train).push_back(r);
  }
  split.seed = 3;
  split.test_fraction = 1.0 / 6.0;
  return split;
}

Vocabulary vocab_for(const std::vector<NameRecord>& records) {
  std::vector<NormalizedName> corpus;
  for (const NameRecord& r : records)
    corpus.push_back(
        nmc::normalize_underscore(r.first_name, r.last_name));
  return nmc::train_bpe(corpus, 40);
}

bool same_weights(const EncoderModel& a, const EncoderModel& b) {
  auto pa = a.named_parameters();
  auto pb = b.named_parameters();
  if (pa.size() != pb.size()) return false;
  for (size_t i = 0; i < pa.size(); ++i)
    if (pa[i].tensor->data != pb[i].tensor->data) return false;
  return true;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig t;
  CHECK_NOTHROW(t.validate());
  SUBCASE("epochs") { t.n_epochs = 0; }
  SUBCASE("batch") { t.batch_size = 0; }
  SUBCASE("lr") { t.learning_rate = 0.0f; }
  SUBCASE("decay") { t.weight_decay = -1.0f; }
  SUBCASE("max_len") { t.max_len = 2; }
  SUBCASE("mask rate zero") { t.mask_rate = 0.0f; }
  SUBCASE("mask rate one") { t.mask_rate = 1.0f; }
  CHECK_THROWS_AS(t.validate(), nmc::config_error);
}

TEST_CASE("loss curve serialization") {
  nmc::LossCurve curve;
  curve.train_loss = {{1, 0.5}, {2, 0.25}};
  std::ostringstream out;
  nmc::write_loss_curve(curve, out);
  CHECK(out.str() == "1\t0.5\n2\t0.25\n");
}

TEST_CASE("untrained masked-token loss sits near uniform chance") {
  auto corpus = letter_corpus();
  Vocabulary vocab = nmc::train_bpe(corpus, 48);
  EncoderModel model(tiny_config(vocab.size(), 0), HeadKind::kMlm, 1);

  std::vector<nmc::TokenSequence> seqs;
  for (const auto& name : corpus) seqs.push_back(nmc::encode(name, vocab, 12));
  nmc::Batch batch = nmc::Batch::from_sequences(seqs);
  nmc::Rng rng(99);
  nmc::MaskedBatch masked = nmc::mask_batch(batch, 0.15f, vocab.size(), rng);

  nmc::Graph g(false);
  nmc::Rng drop(0);
  nmc::TensorPtr loss = model.mlm_loss(g, masked, drop, false);
  CHECK(loss->data[0] ==
        doctest::Approx(std::log(double(vocab.size()))).epsilon(0.08));
}

TEST_CASE("masked-token training is deterministic and reduces loss") {
  auto corpus = letter_corpus();
  Vocabulary vocab = nmc::train_bpe(corpus, 48);
  TrainConfig t = tiny_train();
  t.n_epochs = 8;

  nmc::MlmTrainResult a =
      nmc::train_mlm(corpus, vocab, tiny_config(vocab.size(), 0), t);
  nmc::MlmTrainResult b =
      nmc::train_mlm(corpus, vocab, tiny_config(vocab.size(), 0), t);
  CHECK(same_weights(a.model, b.model));
  REQUIRE(a.curve.train_loss.size() == b.curve.train_loss.size());
  CHECK(a.curve.train_loss == b.curve.train_loss);

  t.seed = 8;
  nmc::MlmTrainResult c =
      nmc::train_mlm(corpus, vocab, tiny_config(vocab.size(), 0), t);
  CHECK(!same_weights(a.model, c.model));

  REQUIRE(a.curve.train_loss.size() >= 8);
  const auto& steps = a.curve.train_loss;
  double first = 0.0, last = 0.0;
  for (size_t i = 0; i < 4; ++i) {
    first += steps[i].second;
    last += steps[steps.size() - 4 + i].second;
  }
  CHECK(last < first);
  CHECK(steps.front().first == 1);
  CHECK(steps.back().first == int64_t(steps.size()));
}

TEST_CASE("masked-token training honours the step cap") {
  auto corpus = letter_corpus();
  Vocabulary vocab = nmc::train_bpe(corpus, 48);
  TrainConfig t = tiny_train();
  t.n_epochs = 50;
  t.max_steps = 5;
  nmc::MlmTrainResult r =
      nmc::train_mlm(corpus, vocab, tiny_config(vocab.size(), 0), t);
  CHECK(r.curve.train_loss.size() == 5);
}

TEST_CASE("classifier training is deterministic and learns the toy task") {
  DatasetSplit split = toy_split();
  Vocabulary vocab = vocab_for(split.train);
  TrainConfig t = tiny_train();
  t.n_epochs = 10;
  t.learning_rate = 3e-3f;
  t.eval_every = 20;

  auto run = [&]() {
    EncoderModel model(tiny_config(vocab.size(), 2), HeadKind::kClassifier,
                       t.seed);
    return nmc::train_classifier(split, vocab, std::move(model),
                                 NormScheme::kUnderscoreLower, t);
  };
  nmc::ClassifierTrainResult a = run();
  nmc::ClassifierTrainResult b = run();
  CHECK(same_weights(a.model, b.model));
  CHECK(a.curve.train_loss == b.curve.train_loss);
  CHECK(a.curve.eval_accuracy == b.curve.eval_accuracy);

  REQUIRE(!a.curve.eval_accuracy.empty());
  for (const auto& [step, acc] : a.curve.eval_accuracy) {
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }

  const auto& steps = a.curve.train_loss;
  REQUIRE(steps.size() >= 8);
  double first = 0.0, last = 0.0;
  for (size_t i = 0; i < 4; ++i) {
    first += steps[i].second;
    last += steps[steps.size() - 4 + i].second;
  }
  CHECK(last < first);

  auto matrix = nmc::confusion_matrix(a.model, split.test, vocab,
                                      NormScheme::kUnderscoreLower, t.max_len);
  CHECK(nmc::accuracy_from_confusion(matrix) > 0.5);
}

TEST_CASE("confusion matrix bookkeeping") {
  DatasetSplit split = toy_split();
  Vocabulary vocab = vocab_for(split.train);
  EncoderModel model(tiny_config(vocab.size(), 2), HeadKind::kClassifier, 3);

  auto matrix = nmc::confusion_matrix(model, split.test, vocab,
                                      NormScheme::kUnderscoreLower, 12);
  REQUIRE(matrix.size() == 2);
  int64_t row0 = matrix[0][0] + matrix[0][1];
  int64_t row1 = matrix[1][0] + matrix[1][1];
  int64_t want0 = 0, want1 = 0;
  for (const NameRecord& r : split.test) (r.label_id == 0 ? want0 : want1)++;
  CHECK(row0 == want0);
  CHECK(row1 == want1);

  SUBCASE("thread count does not change the counts") {
    setenv("NMC_THREADS", "3", 1);
    auto threaded = nmc::confusion_matrix(model, split.test, vocab,
                                          NormScheme::kUnderscoreLower, 12);
    unsetenv("NMC_THREADS");
    CHECK(threaded == matrix);
  }
  SUBCASE("empty test set") {
    CHECK_THROWS_AS(nmc::confusion_matrix(model, {}, vocab,
                                          NormScheme::kUnderscoreLower, 12),
                    nmc::data_error);
  }
  SUBCASE("label outside the model's classes") {
    std::vector<NameRecord> bad = {{"abca", "bcab", 2}};
    CHECK_THROWS_AS(nmc::confusion_matrix(model, bad, vocab,
                                          NormScheme::kUnderscoreLower, 12),
                    nmc::data_error);
  }
}

TEST_CASE("accuracy from confusion counts the diagonal") {
  CHECK(nmc::accuracy_from_confusion({{2, 1}, {1, 2}}) ==
        doctest::Approx(4.0 / 6.0));
  CHECK(nmc::accuracy_from_confusion({{0, 0}, {0, 0}}) == 0.0);
}

TEST_CASE("metrics for a symmetric two-class confusion") {
  LabelSet labels = LabelSet::custom("pair", {"x", "y"});
  MetricsReport report =
      nmc::metrics_from_confusion({{2, 1}, {1, 2}}, labels);
  REQUIRE(report.per_class.size() == 2);
  for (const nmc::ClassMetrics& cm : report.per_class) {
    CHECK(cm.precision == 2.0 / 3.0);
    CHECK(cm.recall == 2.0 / 3.0);
    CHECK(cm.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(cm.support == 3);
  }
  CHECK(report.weighted_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(report.macro_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(report.total == 6);
}

TEST_CASE("metrics match an independent tally on random confusions") {
  nmc::Rng rng(314);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t k = 2 + rng.below(5);
    const size_t n = 30 + rng.below(100);
    std::vector<int> actual(n), predicted(n);
    for (size_t i = 0; i < n; ++i) {
      actual[i] = int(rng.below(k));
      predicted[i] = int(rng.below(k));
    }
    std::vector<std::vector<int64_t>> matrix(k, std::vector<int64_t>(k, 0));
    for (size_t i = 0; i < n; ++i) matrix[actual[i]][predicted[i]]++;

    std::vector<std::string> names;
    for (size_t c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
    MetricsReport report = nmc::metrics_from_confusion(
        matrix, LabelSet::custom("t", names));
    testutil::OracleMetrics oracle =
        testutil::oracle_metrics(actual, predicted, k);

    REQUIRE(report.per_class.size() == k);
    for (size_t c = 0; c < k; ++c) {
      CHECK(report.per_class[c].precision == oracle.precision[c]);
      CHECK(report.per_class[c].recall == oracle.recall[c]);
      CHECK(report.per_class[c].f1 == oracle.f1[c]);
      CHECK(report.per_class[c].support == oracle.support[c]);
    }
    CHECK(report.weighted_f1 == oracle.weighted_f1);
    CHECK(report.macro_f1 == oracle.macro_f1);
  }
}

TEST_CASE("metrics reject a malformed confusion") {
  LabelSet labels = LabelSet::custom("pair", {"x", "y"});
  CHECK_THROWS_AS(nmc::metrics_from_confusion({{1, 2}}, labels),
                  nmc::op_error);
  CHECK_THROWS_AS(nmc::metrics_from_confusion({{1}, {2}}, labels),
                  nmc::op_error);
}

TEST_CASE("improvement over a baseline") {
  LabelSet labels = LabelSet::custom("pair", {"x", "y"});
  MetricsReport report =
      nmc::metrics_from_confusion({{8, 2}, {1, 9}}, labels);

  SUBCASE("percentages come from the unrounded values") {
    nmc::ImprovementTable table =
        nmc::improvement_table(report, {{"x", 0.5}, {"y", 0.8}});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].label == "x");
    CHECK(table.rows[0].improvement_pct ==
          doctest::Approx(100.0 * (report.per_class[0].f1 - 0.5) / 0.5));
    CHECK(table.rows[1].improvement_pct ==
          doctest::Approx(100.0 * (report.per_class[1].f1 - 0.8) / 0.8));
    const double wbase = (10.0 * 0.5 + 10.0 * 0.8) / 20.0;
    CHECK(table.weighted_baseline_f1 == doctest::Approx(wbase));
    CHECK(table.weighted_improvement_pct ==
          doctest::Approx(100.0 * (report.weighted_f1 - wbase) / wbase));
  }
  SUBCASE("missing label") {
    CHECK_THROWS_WITH_AS(nmc::improvement_table(report, {{"x", 0.5}}),
                         doctest::Contains("missing class y"),
                         nmc::data_error);
  }
  SUBCASE("zero baseline") {
    CHECK_THROWS_AS(nmc::improvement_table(report, {{"x", 0.0}, {"y", 0.8}}),
                    nmc::data_error);
  }
}

TEST_CASE("baseline files hold label f1 pairs") {
  testutil::TempDir dir;
  SUBCASE("well formed") {
    testutil::write_file(dir.file("base.txt"), "x 0.5\ny 0.8\n");
    auto base = nmc::load_baseline_f1(dir.file("base.txt"));
    REQUIRE(base.size() == 2);
    CHECK(base[0] == std::pair<std::string, double>{"x", 0.5});
    CHECK(base[1] == std::pair<std::string, double>{"y", 0.8});
  }
  SUBCASE("junk value") {
    testutil::write_file(dir.file("base.txt"), "x zebra\n");
    CHECK_THROWS_AS(nmc::load_baseline_f1(dir.file("base.txt")),
                    nmc::data_error);
  }
  SUBCASE("empty") {
    testutil::write_file(dir.file("base.txt"), "");
    CHECK_THROWS_AS(nmc::load_baseline_f1(dir.file("base.txt")),
                    nmc::data_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(nmc::load_baseline_f1(dir.file("nope.txt")),
                    nmc::data_error);
  }
}

TEST_CASE("metrics table layout") {
  LabelSet labels = LabelSet::custom("pair", {"x", "y"});
  MetricsReport report =
      nmc::metrics_from_confusion({{2, 1}, {1, 2}}, labels);
  const std::string want =
      "              precision  recall  f1-score  support\n"
      "x                  0.67    0.67      0.67        3\n"
      "y                  0.67    0.67      0.67        3\n"
      "weighted avg       0.67    0.67      0.67        6\n"
      "macro avg                            0.67        6\n";
  CHECK(nmc::render_metrics_table(report) == want);
}

TEST_CASE("metrics json parses back") {
  LabelSet labels = LabelSet::custom("pair", {"x", "y"});
  MetricsReport report =
      nmc::metrics_from_confusion({{2, 1}, {1, 2}}, labels);
  nlohmann::json j = nlohmann::json::parse(nmc::render_metrics_json(report));
  REQUIRE(j["classes"].size() == 2);
  CHECK(j["classes"][0]["label"] == "x");
  CHECK(j["classes"][0]["support"] == 3);
  CHECK(j["weighted"]["f1"].get<double>() ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(j["macro"]["f1"].get<double>() ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(j["total"] == 6);
}

TEST_CASE("improvement table layout") {
  nmc::ImprovementTable table;
  table.rows = {{"x", 0.75, 0.5, 50.0}, {"y", 0.9, 0.8, 12.5}};
  table.weighted_f1 = 0.825;
  table.weighted_baseline_f1 = 0.65;
  table.weighted_improvement_pct = 26.92;
  const std::string want =
      "              f1-score  baseline  % improvement\n"
      "x                 0.75      0.50          50.00\n"
      "y                 0.90      0.80          12.50\n"
      "weighted avg      0.82      0.65          26.92\n";
  CHECK(nmc::render_improvement_table(table) == want);
}
