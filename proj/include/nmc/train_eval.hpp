#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "nmc/bpe.hpp"
#include "nmc/data_ingest.hpp"
#include "nmc/model_io.hpp"
#include "nmc/normalize.hpp"
#include "nmc/transformer.hpp"

namespace nmc {

struct TrainConfig {
  size_t n_epochs = 4;
  size_t batch_size = 128;
  float learning_rate = 2e-5f;
  float weight_decay = 2e-5f;
  uint64_t seed = 42;
  size_t max_len = 32;
  float mask_rate = 0.15f;
  size_t eval_every = 0;  // steps between held-out accuracy probes; 0 = off
  size_t max_steps = 0;   // hard step cap; 0 = no cap
  bool class_weighted = false;
  size_t param_ceiling = 100000000;

  void validate() const;  // throws config_error
};

struct LossCurve {
  std::vector<std::pair<int64_t, double>> train_loss;
  std::vector<std::pair<int64_t, double>> eval_accuracy;
};

void write_loss_curve(const LossCurve& curve, std::ostream& out);

struct MlmTrainResult {
  EncoderModel model;
  LossCurve curve;
};

struct ClassifierTrainResult {
  EncoderModel model;
  LossCurve curve;
};

MlmTrainResult train_mlm(const std::vector<NormalizedName>& corpus,
                         const Vocabulary& vocab, ModelConfig model_config,
                         const TrainConfig& config);

ClassifierTrainResult train_classifier(const DatasetSplit& split,
                                       const Vocabulary& vocab,
                                       EncoderModel model, NormScheme scheme,
                                       const TrainConfig& config);

// Entry (i, j) counts true class i predicted as class j; argmax ties go to
// the lowest class index. Reads NMC_THREADS to fan evaluation out over
// worker threads; counts merge exactly, so the result is thread-count
// independent. Throws data_error on an empty test set or a label outside
// the model's classes.
std::vector<std::vector<int64_t>> confusion_matrix(
    const EncoderModel& model, const std::vector<NameRecord>& test,
    const Vocabulary& vocab, NormScheme scheme, size_t max_len);

double accuracy_from_confusion(const std::vector<std::vector<int64_t>>& m);

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t support = 0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  int64_t total = 0;
};

MetricsReport metrics_from_confusion(
    const std::vector<std::vector<int64_t>>& matrix, const LabelSet& labels);

struct ImprovementRow {
  std::string label;
  double f1 = 0.0;
  double baseline_f1 = 0.0;
  double improvement_pct = 0.0;
};

struct ImprovementTable {
  std::vector<ImprovementRow> rows;
  double weighted_f1 = 0.0;
  double weighted_baseline_f1 = 0.0;
  double weighted_improvement_pct = 0.0;
};

// Baselines pair with report classes by label; comparisons run on the
// unrounded f1 values. Throws data_error on a missing label or a zero
// baseline.
ImprovementTable improvement_table(
    const MetricsReport& report,
    const std::vector<std::pair<std::string, double>>& baseline_f1);

// One "<label> <f1>" pair per line, whitespace separated.
std::vector<std::pair<std::string, double>> load_baseline_f1(
    const std::string& path);

std::string render_metrics_table(const MetricsReport& report);
std::string render_metrics_json(const MetricsReport& report);
std::string render_improvement_table(const ImprovementTable& table);

}  // namespace nmc
