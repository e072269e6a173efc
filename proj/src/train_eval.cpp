#include "nmc/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "nmc/error.hpp"
#include "nmc/optim.hpp"
#include "nmc/ops.hpp"
#include "nmc/rng.hpp"

namespace nmc {

void TrainConfig::validate() const {
  if (n_epochs < 1) throw config_error("n_epochs must be at least 1");
  if (batch_size < 1) throw config_error("batch_size must be at least 1");
  if (!(learning_rate > 0.0f))
    throw config_error("learning_rate must be positive");
  if (!(weight_decay >= 0.0f))
    throw config_error("weight_decay must be nonnegative");
  if (max_len < 3) throw config_error("max_len must be at least 3");
  if (!(mask_rate > 0.0f && mask_rate < 1.0f))
    throw config_error("mask_rate must be in (0,1)");
}

void write_loss_curve(const LossCurve& curve, std::ostream& out) {
  for (const auto& [step, loss] : curve.train_loss)
    out << step << "\t" << loss << "\n";
}

namespace {

void check_param_ceiling(const ModelConfig& config, HeadKind kind,
                         size_t ceiling) {
  const size_t n = parameter_count(config, kind);
  if (ceiling > 0 && n > ceiling)
    throw config_error("model would hold " + std::to_string(n) +
                       " parameters, over the ceiling of " +
                       std::to_string(ceiling));
}

AdamWConfig optimizer_config(const TrainConfig& config) {
  AdamWConfig opt;
  opt.lr = config.learning_rate;
  opt.weight_decay = config.weight_decay;
  return opt;
}

size_t eval_threads() {
  const char* env = std::getenv("NMC_THREADS");
  if (!env) return 1;
  const long n = std::strtol(env, nullptr, 10);
  if (n < 1) return 1;
  return std::min<long>(n, 64);
}

}  // namespace

MlmTrainResult train_mlm(const std::vector<NormalizedName>& corpus,
                         const Vocabulary& vocab, ModelConfig model_config,
                         const TrainConfig& config) {
  if (corpus.empty()) throw data_error("pretraining corpus is empty");
  config.validate();
  if (model_config.vocab_size == 0) model_config.vocab_size = vocab.size();
  if (model_config.vocab_size != vocab.size())
    throw config_error("model vocab_size " +
                       std::to_string(model_config.vocab_size) +
                       " does not match the vocabulary's " +
                       std::to_string(vocab.size()) + " tokens");
  model_config.validate(HeadKind::kMlm);
  if (config.max_len > model_config.max_positions)
    throw config_error("max_len " + std::to_string(config.max_len) +
                       " exceeds max_positions " +
                       std::to_string(model_config.max_positions));
  check_param_ceiling(model_config, HeadKind::kMlm, config.param_ceiling);

  std::vector<TokenSequence> seqs;
  seqs.reserve(corpus.size());
  for (const NormalizedName& name : corpus)
    seqs.push_back(encode(name, vocab, config.max_len));

  Rng root(config.seed);
  const uint64_t model_seed = root.u64();
  Rng shuffle_rng(root.u64());
  Rng mask_rng(root.u64());
  Rng drop_rng(root.u64());

  EncoderModel model(model_config, HeadKind::kMlm, model_seed);
  AdamW opt(model.parameters(), optimizer_config(config));
  LossCurve curve;
  int64_t step = 0;

  std::vector<size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t epoch = 0; epoch < config.n_epochs; ++epoch) {
    deterministic_shuffle(order, shuffle_rng);
    for (size_t start = 0; start < order.size();
         start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<TokenSequence> chunk;
      chunk.reserve(end - start);
      for (size_t i = start; i < end; ++i) chunk.push_back(seqs[order[i]]);
      MaskedBatch masked = mask_batch(Batch::from_sequences(chunk),
                                      config.mask_rate, vocab.size(),
                                      mask_rng);
      if (masked.n_selected == 0) continue;  // nothing to predict

      Graph g;
      opt.zero_grad();
      TensorPtr loss = model.mlm_loss(g, masked, drop_rng, true);
      g.backward(loss);
      opt.step();
      ++step;
      curve.train_loss.emplace_back(step, double(loss->data[0]));
      if (config.max_steps > 0 &&
          static_cast<size_t>(step) >= config.max_steps)
        return {std::move(model), std::move(curve)};
    }
  }
  return {std::move(model), std::move(curve)};
}

ClassifierTrainResult train_classifier(const DatasetSplit& split,
                                       const Vocabulary& vocab,
                                       EncoderModel model, NormScheme scheme,
                                       const TrainConfig& config) {
  if (split.train.empty()) throw data_error("training set is empty");
  config.validate();
  const ModelConfig& mc = model.config();
  if (model.head_kind() != HeadKind::kClassifier)
    throw config_error("model has no classification head");
  if (mc.vocab_size != vocab.size())
    throw config_error("model vocab_size " + std::to_string(mc.vocab_size) +
                       " does not match the vocabulary's " +
                       std::to_string(vocab.size()) + " tokens");
  if (config.max_len > mc.max_positions)
    throw config_error("max_len " + std::to_string(config.max_len) +
                       " exceeds max_positions " +
                       std::to_string(mc.max_positions));
  check_param_ceiling(mc, HeadKind::kClassifier, config.param_ceiling);
  const size_t n_classes = mc.n_classes;
  for (const NameRecord& r : split.train)
    if (r.label_id < 0 || static_cast<size_t>(r.label_id) >= n_classes)
      throw data_error("label id " + std::to_string(r.label_id) +
                       " outside the head's " + std::to_string(n_classes) +
                       " classes");

  std::vector<TokenSequence> seqs;
  std::vector<int32_t> labels;
  seqs.reserve(split.train.size());
  labels.reserve(split.train.size());
  for (const NameRecord& r : split.train) {
    seqs.push_back(encode(
        normalize_name(r.first_name, r.last_name, scheme), vocab,
        config.max_len));
    labels.push_back(r.label_id);
  }

  std::vector<float> class_weights;
  if (config.class_weighted) {
    std::vector<int64_t> counts(n_classes, 0);
    for (int32_t l : labels) ++counts[static_cast<size_t>(l)];
    class_weights.resize(n_classes, 0.0f);
    for (size_t k = 0; k < n_classes; ++k)
      if (counts[k] > 0)
        class_weights[k] =
            static_cast<float>(double(labels.size()) /
                               (double(n_classes) * double(counts[k])));
  }

  Rng root(config.seed);
  Rng shuffle_rng(root.u64());
  Rng drop_rng(root.u64());

  AdamW opt(model.parameters(), optimizer_config(config));
  LossCurve curve;
  int64_t step = 0;
  bool done = false;

  std::vector<size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t epoch = 0; epoch < config.n_epochs && !done; ++epoch) {
    deterministic_shuffle(order, shuffle_rng);
    for (size_t start = 0; start < order.size() && !done;
         start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<TokenSequence> chunk;
      std::vector<int32_t> targets;
      chunk.reserve(end - start);
      targets.reserve(end - start);
      for (size_t i = start; i < end; ++i) {
        chunk.push_back(seqs[order[i]]);
        targets.push_back(labels[order[i]]);
      }

      Graph g;
      opt.zero_grad();
      TensorPtr logits = model.classify_logits(
          g, Batch::from_sequences(chunk), drop_rng, true);
      TensorPtr loss = cross_entropy(g, logits, targets, class_weights);
      g.backward(loss);
      opt.step();
      ++step;
      curve.train_loss.emplace_back(step, double(loss->data[0]));

      if (config.eval_every > 0 && !split.test.empty() &&
          step % static_cast<int64_t>(config.eval_every) == 0) {
        const auto m = confusion_matrix(model, split.test, vocab, scheme,
                                        config.max_len);
        curve.eval_accuracy.emplace_back(step, accuracy_from_confusion(m));
      }
      if (config.max_steps > 0 &&
          static_cast<size_t>(step) >= config.max_steps)
        done = true;
    }
  }
  return {std::move(model), std::move(curve)};
}

std::vector<std::vector<int64_t>> confusion_matrix(
    const EncoderModel& model, const std::vector<NameRecord>& test,
    const Vocabulary& vocab, NormScheme scheme, size_t max_len) {
  if (test.empty()) throw data_error("test set is empty");
  const size_t k = model.config().n_classes;
  if (model.head_kind() != HeadKind::kClassifier)
    throw config_error("model has no classification head");
  for (const NameRecord& r : test)
    if (r.label_id < 0 || static_cast<size_t>(r.label_id) >= k)
      throw data_error("label id " + std::to_string(r.label_id) +
                       " outside the model's " + std::to_string(k) +
                       " classes");

  std::vector<TokenSequence> seqs;
  seqs.reserve(test.size());
  for (const NameRecord& r : test)
    seqs.push_back(encode(
        normalize_name(r.first_name, r.last_name, scheme), vocab, max_len));

  const size_t n_threads = std::min(eval_threads(), test.size());
  std::vector<std::vector<std::vector<int64_t>>> partial(
      n_threads, std::vector<std::vector<int64_t>>(
                     k, std::vector<int64_t>(k, 0)));

  constexpr size_t kEvalBatch = 64;
  auto worker = [&](size_t tid, size_t lo, size_t hi) {
    Rng rng(0);  // eval mode never draws from it
    for (size_t start = lo; start < hi; start += kEvalBatch) {
      const size_t end = std::min(hi, start + kEvalBatch);
      std::vector<TokenSequence> chunk(seqs.begin() + start,
                                       seqs.begin() + end);
      Graph g(false);
      TensorPtr logits = model.classify_logits(
          g, Batch::from_sequences(chunk), rng, false);
      for (size_t i = 0; i < end - start; ++i) {
        const float* row = logits->data.data() + i * k;
        size_t best = 0;
        for (size_t j = 1; j < k; ++j)
          if (row[j] > row[best]) best = j;
        ++partial[tid][static_cast<size_t>(test[start + i].label_id)][best];
      }
    }
  };

  if (n_threads <= 1) {
    worker(0, 0, test.size());
  } else {
    std::vector<std::thread> pool;
    const size_t per = (test.size() + n_threads - 1) / n_threads;
    for (size_t t = 0; t < n_threads; ++t) {
      const size_t lo = t * per, hi = std::min(test.size(), lo + per);
      if (lo >= hi) break;
      pool.emplace_back(worker, t, lo, hi);
    }
    for (std::thread& t : pool) t.join();
  }

  std::vector<std::vector<int64_t>> matrix(k, std::vector<int64_t>(k, 0));
  for (const auto& part : partial)
    for (size_t i = 0; i < k; ++i)
      for (size_t j = 0; j < k; ++j) matrix[i][j] += part[i][j];
  return matrix;
}

double accuracy_from_confusion(const std::vector<std::vector<int64_t>>& m) {
  int64_t correct = 0, total = 0;
  for (size_t i = 0; i < m.size(); ++i)
    for (size_t j = 0; j < m[i].size(); ++j) {
      total += m[i][j];
      if (i == j) correct += m[i][j];
    }
  return total == 0 ? 0.0 : double(correct) / double(total);
}

MetricsReport metrics_from_confusion(
    const std::vector<std::vector<int64_t>>& matrix, const LabelSet& labels) {
  const size_t k = labels.size();
  if (matrix.size() != k)
    throw op_error("confusion matrix has " + std::to_string(matrix.size()) +
                   " rows for " + std::to_string(k) + " classes");
  for (const auto& row : matrix)
    if (row.size() != k)
      throw op_error("confusion matrix is not square");

  MetricsReport report;
  double wp = 0.0, wr = 0.0, wf = 0.0, macro = 0.0;
  for (size_t i = 0; i < k; ++i) {
    int64_t row_sum = 0, col_sum = 0;
    for (size_t j = 0; j < k; ++j) {
      row_sum += matrix[i][j];
      col_sum += matrix[j][i];
    }
    ClassMetrics cm;
    cm.label = labels.label(static_cast<int>(i));
    cm.support = row_sum;
    cm.precision = col_sum == 0 ? 0.0 : double(matrix[i][i]) / col_sum;
    cm.recall = row_sum == 0 ? 0.0 : double(matrix[i][i]) / row_sum;
    cm.f1 = cm.precision + cm.recall == 0.0
                ? 0.0
                : 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall);
    report.total += row_sum;
    wp += double(cm.support) * cm.precision;
    wr += double(cm.support) * cm.recall;
    wf += double(cm.support) * cm.f1;
    macro += cm.f1;
    report.per_class.push_back(std::move(cm));
  }
  if (report.total > 0) {
    report.weighted_precision = wp / double(report.total);
    report.weighted_recall = wr / double(report.total);
    report.weighted_f1 = wf / double(report.total);
  }
  report.macro_f1 = k == 0 ? 0.0 : macro / double(k);
  return report;
}

ImprovementTable improvement_table(
    const MetricsReport& report,
    const std::vector<std::pair<std::string, double>>& baseline_f1) {
  ImprovementTable table;
  double weighted_base = 0.0;
  for (const ClassMetrics& cm : report.per_class) {
    auto it = std::find_if(
        baseline_f1.begin(), baseline_f1.end(),
        [&](const auto& kv) { return kv.first == cm.label; });
    if (it == baseline_f1.end())
      throw data_error("baseline is missing class " + cm.label);
    if (it->second == 0.0)
      throw data_error("baseline f1 for " + cm.label + " is zero");
    ImprovementRow row;
    row.label = cm.label;
    row.f1 = cm.f1;
    row.baseline_f1 = it->second;
    row.improvement_pct = 100.0 * (cm.f1 - it->second) / it->second;
    weighted_base += double(cm.support) * it->second;
    table.rows.push_back(std::move(row));
  }
  table.weighted_f1 = report.weighted_f1;
  table.weighted_baseline_f1 =
      report.total == 0 ? 0.0 : weighted_base / double(report.total);
  if (table.weighted_baseline_f1 == 0.0)
    throw data_error("weighted baseline f1 is zero");
  table.weighted_improvement_pct =
      100.0 * (table.weighted_f1 - table.weighted_baseline_f1) /
      table.weighted_baseline_f1;
  return table;
}

std::vector<std::pair<std::string, double>> load_baseline_f1(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open file: " + path);
  std::vector<std::pair<std::string, double>> out;
  std::string label;
  double f1;
  while (in >> label >> f1) out.emplace_back(label, f1);
  if (!in.eof())
    throw data_error(path + ": expected '<label> <f1>' pairs");
  if (out.empty()) throw data_error(path + ": no baseline entries");
  return out;
}

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pad_left(const std::string& s, size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string render_metrics_table(const MetricsReport& report) {
  size_t label_w = std::string("weighted avg").size();
  for (const ClassMetrics& cm : report.per_class)
    label_w = std::max(label_w, cm.label.size());

  std::ostringstream out;
  out << pad_right("", label_w) << pad_left("precision", 11)
      << pad_left("recall", 8) << pad_left("f1-score", 10)
      << pad_left("support", 9) << "\n";
  for (const ClassMetrics& cm : report.per_class)
    out << pad_right(cm.label, label_w) << pad_left(fixed2(cm.precision), 11)
        << pad_left(fixed2(cm.recall), 8) << pad_left(fixed2(cm.f1), 10)
        << pad_left(std::to_string(cm.support), 9) << "\n";
  out << pad_right("weighted avg", label_w)
      << pad_left(fixed2(report.weighted_precision), 11)
      << pad_left(fixed2(report.weighted_recall), 8)
      << pad_left(fixed2(report.weighted_f1), 10)
      << pad_left(std::to_string(report.total), 9) << "\n";
  out << pad_right("macro avg", label_w) << pad_left("", 11)
      << pad_left("", 8) << pad_left(fixed2(report.macro_f1), 10)
      << pad_left(std::to_string(report.total), 9) << "\n";
  return out.str();
}

std::string render_metrics_json(const MetricsReport& report) {
  nlohmann::json j;
  j["classes"] = nlohmann::json::array();
  for (const ClassMetrics& cm : report.per_class)
    j["classes"].push_back({{"label", cm.label},
                            {"precision", cm.precision},
                            {"recall", cm.recall},
                            {"f1", cm.f1},
                            {"support", cm.support}});
  j["weighted"] = {{"precision", report.weighted_precision},
                   {"recall", report.weighted_recall},
                   {"f1", report.weighted_f1}};
  j["macro"] = {{"f1", report.macro_f1}};
  j["total"] = report.total;
  return j.dump(2) + "\n";
}

std::string render_improvement_table(const ImprovementTable& table) {
  size_t label_w = std::string("weighted avg").size();
  for (const ImprovementRow& row : table.rows)
    label_w = std::max(label_w, row.label.size());

  std::ostringstream out;
  out << pad_right("", label_w) << pad_left("f1-score", 10)
      << pad_left("baseline", 10) << pad_left("% improvement", 15) << "\n";
  for (const ImprovementRow& row : table.rows)
    out << pad_right(row.label, label_w) << pad_left(fixed2(row.f1), 10)
        << pad_left(fixed2(row.baseline_f1), 10)
        << pad_left(fixed2(row.improvement_pct), 15) << "\n";
  out << pad_right("weighted avg", label_w)
      << pad_left(fixed2(table.weighted_f1), 10)
      << pad_left(fixed2(table.weighted_baseline_f1), 10)
      << pad_left(fixed2(table.weighted_improvement_pct), 15) << "\n";
  return out.str();
}

}  // namespace nmc
