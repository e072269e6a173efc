#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nmc/bpe.hpp"
#include "nmc/data_ingest.hpp"
#include "nmc/error.hpp"
#include "nmc/model_io.hpp"
#include "nmc/normalize.hpp"
#include "nmc/synthetic.hpp"
#include "nmc/train_eval.hpp"
#include "nmc/transformer.hpp"
#include "nmc/unicode.hpp"

namespace {

using nmc::config_error;
using nmc::data_error;
using json = nlohmann::json;

// Labels the source data drops without complaint; anything else outside the
// task's class set aborts the run so typos cannot silently shrink the data.
const std::set<std::string> kDroppableLabels = {"unknown", "other",
                                                "multiracial"};

struct CommonDataFlags {
  std::string data;
  std::string first_col = "first_name";
  std::string last_col = "last_name";
  std::string label_col = "label";
  std::string task = "race5";
  std::string custom_labels;
};

void add_data_flags(CLI::App* cmd, CommonDataFlags& f, bool need_data = true) {
  auto* opt = cmd->add_option("--data", f.data, "labeled name CSV");
  if (need_data) opt->required();
  cmd->add_option("--first-name-col", f.first_col, "first-name column name");
  cmd->add_option("--last-name-col", f.last_col, "last-name column name");
  cmd->add_option("--label-col", f.label_col, "label column name");
  cmd->add_option("--task", f.task, "label set")
      ->check(CLI::IsMember({"race5", "ethnicity13", "custom"}));
  cmd->add_option("--labels", f.custom_labels,
                  "comma-separated class list for --task custom");
}

nmc::LabelSet task_labels(const CommonDataFlags& f) {
  if (f.task == "race5") return nmc::LabelSet::race5();
  if (f.task == "ethnicity13") return nmc::LabelSet::ethnicity13();
  if (f.custom_labels.empty())
    throw config_error("--task custom requires --labels");
  std::vector<std::string> classes;
  std::string cur;
  for (char c : f.custom_labels) {
    if (c == ',') {
      classes.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  classes.push_back(cur);
  return nmc::LabelSet::custom("custom", std::move(classes));
}

nmc::LoadResult load_data(const CommonDataFlags& f,
                          const nmc::LabelSet& labels) {
  nmc::ColumnMap columns{f.first_col, f.last_col, f.label_col};
  nmc::LoadResult result = nmc::load_labeled_csv(f.data, labels, columns);
  nmc::print_skip_counters(result, std::cerr);
  for (const auto& [label, count] : result.unknown_labels)
    if (!kDroppableLabels.count(label))
      throw data_error("label '" + label + "' is not in task '" +
                       labels.name() + "' (" + std::to_string(count) +
                       " rows)");
  return result;
}

json load_run_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw config_error(path + ": " + e.what());
  }
}

// Precedence: built-in default, then config file, then explicit flag.
template <class T>
void merge_field(T& value, const json& section, const char* key,
                 const CLI::Option* flag) {
  if (flag && flag->count() > 0) return;  // flag already wrote the value
  if (section.contains(key)) value = section.at(key).get<T>();
}

struct ModelFlags {
  std::string preset = "full";
  nmc::ModelConfig config;
  CLI::Option *o_preset = nullptr, *o_hidden = nullptr, *o_layers = nullptr,
              *o_heads = nullptr, *o_ffn = nullptr, *o_max_pos = nullptr,
              *o_dropout = nullptr;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  f.o_preset = cmd->add_option("--model-preset", f.preset,
                               "base model size (full or desk)")
                   ->check(CLI::IsMember({"full", "desk"}));
  f.o_hidden = cmd->add_option("--hidden-size", f.config.hidden_size);
  f.o_layers = cmd->add_option("--layers", f.config.n_layers);
  f.o_heads = cmd->add_option("--heads", f.config.n_heads);
  f.o_ffn = cmd->add_option("--ffn-size", f.config.ffn_size);
  f.o_max_pos = cmd->add_option("--max-positions", f.config.max_positions);
  f.o_dropout = cmd->add_option("--dropout", f.config.dropout_rate);
}

nmc::ModelConfig resolve_model_config(const ModelFlags& f, const json& run) {
  const json section = run.value("model", json::object());
  std::string preset = f.preset;
  if (f.o_preset->count() == 0 && section.contains("preset"))
    preset = section.at("preset").get<std::string>();
  nmc::ModelConfig config =
      preset == "desk" ? nmc::ModelConfig::desk() : nmc::ModelConfig::full();
  auto pick = [&](size_t& dst, const char* key, const CLI::Option* flag,
                  size_t flag_value) {
    if (flag->count() > 0)
      dst = flag_value;
    else if (section.contains(key))
      dst = section.at(key).get<size_t>();
  };
  pick(config.hidden_size, "hidden_size", f.o_hidden, f.config.hidden_size);
  pick(config.n_layers, "n_layers", f.o_layers, f.config.n_layers);
  pick(config.n_heads, "n_heads", f.o_heads, f.config.n_heads);
  pick(config.ffn_size, "ffn_size", f.o_ffn, f.config.ffn_size);
  pick(config.max_positions, "max_positions", f.o_max_pos,
       f.config.max_positions);
  if (f.o_dropout->count() > 0)
    config.dropout_rate = f.config.dropout_rate;
  else if (section.contains("dropout_rate"))
    config.dropout_rate = section.at("dropout_rate").get<float>();
  return config;
}

struct TrainFlags {
  nmc::TrainConfig config;
  double test_fraction = 0.1;
  CLI::Option *o_epochs = nullptr, *o_batch = nullptr, *o_lr = nullptr,
              *o_wd = nullptr, *o_seed = nullptr, *o_max_len = nullptr,
              *o_mask_rate = nullptr, *o_eval_every = nullptr,
              *o_max_steps = nullptr, *o_weighted = nullptr,
              *o_test_fraction = nullptr;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_split) {
  f.o_epochs = cmd->add_option("--epochs", f.config.n_epochs);
  f.o_batch = cmd->add_option("--batch-size", f.config.batch_size);
  f.o_lr = cmd->add_option("--lr", f.config.learning_rate);
  f.o_wd = cmd->add_option("--wd", f.config.weight_decay);
  f.o_seed = cmd->add_option("--seed", f.config.seed);
  f.o_max_len = cmd->add_option("--max-len", f.config.max_len);
  f.o_mask_rate = cmd->add_option("--mask-rate", f.config.mask_rate);
  f.o_max_steps = cmd->add_option("--max-steps", f.config.max_steps);
  if (with_split) {
    f.o_eval_every = cmd->add_option("--eval-every", f.config.eval_every);
    f.o_weighted = cmd->add_flag("--class-weighted", f.config.class_weighted,
                                 "inverse-frequency loss weights");
    f.o_test_fraction =
        cmd->add_option("--test-fraction", f.test_fraction);
  }
}

void resolve_train_config(TrainFlags& f, const json& run) {
  const json section = run.value("train", json::object());
  merge_field(f.config.n_epochs, section, "n_epochs", f.o_epochs);
  merge_field(f.config.batch_size, section, "batch_size", f.o_batch);
  merge_field(f.config.learning_rate, section, "learning_rate", f.o_lr);
  merge_field(f.config.weight_decay, section, "weight_decay", f.o_wd);
  merge_field(f.config.seed, section, "seed", f.o_seed);
  merge_field(f.config.max_len, section, "max_len", f.o_max_len);
  merge_field(f.config.mask_rate, section, "mask_rate", f.o_mask_rate);
  merge_field(f.config.max_steps, section, "max_steps", f.o_max_steps);
  if (f.o_eval_every)
    merge_field(f.config.eval_every, section, "eval_every", f.o_eval_every);
  if (f.o_weighted)
    merge_field(f.config.class_weighted, section, "class_weighted",
                f.o_weighted);
  if (f.o_test_fraction)
    merge_field(f.test_fraction, section, "test_fraction", f.o_test_fraction);
}

struct TokenizerFlags {
  std::string scheme = "case_marked";
  size_t max_len = 32;
  CLI::Option *o_scheme = nullptr, *o_max_len = nullptr;
};

void add_tokenizer_scheme_flag(CLI::App* cmd, TokenizerFlags& f) {
  f.o_scheme = cmd->add_option("--scheme", f.scheme, "name normalization")
                   ->check(CLI::IsMember({"case_marked", "underscore_lower"}));
}

nmc::NormScheme resolve_scheme(const TokenizerFlags& f, const json& run) {
  std::string scheme = f.scheme;
  const json section = run.value("tokenizer", json::object());
  if (f.o_scheme->count() == 0 && section.contains("scheme"))
    scheme = section.at("scheme").get<std::string>();
  return nmc::norm_scheme_from_name(scheme);
}

std::vector<nmc::NormalizedName> normalize_records(
    const std::vector<nmc::NameRecord>& records, nmc::NormScheme scheme) {
  std::vector<nmc::NormalizedName> out;
  out.reserve(records.size());
  for (const nmc::NameRecord& r : records)
    out.push_back(nmc::normalize_name(r.first_name, r.last_name, scheme));
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write file: " + path);
  out << text;
  if (!out.flush()) throw data_error("failed writing file: " + path);
}

void write_curve_file(const std::string& path, const nmc::LossCurve& curve) {
  std::ostringstream text;
  nmc::write_loss_curve(curve, text);
  write_text_file(path, text.str());
}

// ---- subcommands ----

int cmd_train_tokenizer(const CommonDataFlags& data_flags,
                        const TokenizerFlags& tok_flags, size_t max_vocab,
                        const std::string& out_path) {
  const nmc::LabelSet labels = task_labels(data_flags);
  const nmc::LoadResult loaded = load_data(data_flags, labels);
  const nmc::NormScheme scheme =
      nmc::norm_scheme_from_name(tok_flags.scheme);
  const nmc::Vocabulary vocab =
      nmc::train_bpe(normalize_records(loaded.records, scheme), max_vocab);
  nmc::save_vocab(vocab, out_path);
  std::cout << "vocab_size=" << vocab.size() << "\n";
  const size_t show = std::min<size_t>(20, vocab.merges.size());
  for (size_t i = 0; i < show; ++i)
    std::cout << "merge " << vocab.merges[i].left << " "
              << vocab.merges[i].right << "\n";
  return 0;
}

int cmd_pretrain(const CommonDataFlags& data_flags, TrainFlags& train_flags,
                 const ModelFlags& model_flags, TokenizerFlags& tok_flags,
                 const std::string& vocab_path, const std::string& config_path,
                 const std::string& out_path) {
  const json run = load_run_config(config_path);
  resolve_train_config(train_flags, run);
  merge_field(train_flags.config.max_len, run.value("tokenizer", json::object()),
              "max_len", train_flags.o_max_len);
  const nmc::NormScheme scheme = resolve_scheme(tok_flags, run);
  nmc::ModelConfig model_config = resolve_model_config(model_flags, run);

  const nmc::LabelSet labels = task_labels(data_flags);
  const nmc::LoadResult loaded = load_data(data_flags, labels);
  const nmc::Vocabulary vocab = nmc::load_vocab(vocab_path);

  nmc::MlmTrainResult result =
      nmc::train_mlm(normalize_records(loaded.records, scheme), vocab,
                     model_config, train_flags.config);
  nmc::save_model(result.model, vocab, scheme, train_flags.config.max_len,
                  std::nullopt, out_path);
  write_curve_file(out_path + ".loss", result.curve);
  std::cout << "steps=" << result.curve.train_loss.size();
  if (!result.curve.train_loss.empty())
    std::cout << " first_loss=" << result.curve.train_loss.front().second
              << " final_loss=" << result.curve.train_loss.back().second;
  std::cout << "\n";
  return 0;
}

int cmd_train(const CommonDataFlags& data_flags, TrainFlags& train_flags,
              const ModelFlags& model_flags, TokenizerFlags& tok_flags,
              const std::string& vocab_path, const std::string& init_lm_path,
              const std::string& config_path, const std::string& out_path) {
  const json run = load_run_config(config_path);
  resolve_train_config(train_flags, run);
  merge_field(train_flags.config.max_len, run.value("tokenizer", json::object()),
              "max_len", train_flags.o_max_len);

  const nmc::LabelSet labels = task_labels(data_flags);
  const nmc::LoadResult loaded = load_data(data_flags, labels);
  const nmc::DatasetSplit split = nmc::split_train_test(
      loaded.records, train_flags.test_fraction, train_flags.config.seed);

  std::optional<nmc::EncoderModel> model;
  std::optional<nmc::Vocabulary> vocab;
  nmc::NormScheme scheme = nmc::NormScheme::kCaseMarked;
  if (!init_lm_path.empty()) {
    nmc::LoadedModel lm = nmc::load_model(init_lm_path);
    if (lm.model.head_kind() != nmc::HeadKind::kMlm)
      throw data_error(init_lm_path + " does not hold a pretrained LM");
    if (tok_flags.o_scheme->count() > 0 &&
        nmc::norm_scheme_from_name(tok_flags.scheme) != lm.scheme)
      throw config_error("--scheme disagrees with the pretrained model");
    if (train_flags.o_max_len->count() > 0 &&
        train_flags.config.max_len != lm.max_len)
      throw config_error("--max-len disagrees with the pretrained model");
    scheme = lm.scheme;
    train_flags.config.max_len = lm.max_len;
    model = nmc::init_classifier_from_lm(lm.model, labels.size(),
                                         train_flags.config.seed);
    vocab = std::move(lm.vocab);
  } else {
    scheme = resolve_scheme(tok_flags, run);
    vocab = nmc::load_vocab(vocab_path);
    nmc::ModelConfig config = resolve_model_config(model_flags, run);
    config.vocab_size = vocab->size();
    config.n_classes = labels.size();
    model = nmc::EncoderModel(config, nmc::HeadKind::kClassifier,
                              train_flags.config.seed);
  }

  nmc::ClassifierTrainResult result = nmc::train_classifier(
      split, *vocab, std::move(*model), scheme, train_flags.config);
  nmc::save_model(result.model, *vocab, scheme, train_flags.config.max_len,
                  labels, out_path);
  write_curve_file(out_path + ".loss", result.curve);

  const auto matrix = nmc::confusion_matrix(
      result.model, split.test, *vocab, scheme, train_flags.config.max_len);
  const nmc::MetricsReport report = nmc::metrics_from_confusion(matrix, labels);
  const std::string table = nmc::render_metrics_table(report);
  write_text_file(out_path + ".report.txt", table);
  write_text_file(out_path + ".report.json", nmc::render_metrics_json(report));
  std::cout << table;
  return 0;
}

std::vector<size_t> sorted_class_order(const std::vector<float>& probs) {
  std::vector<size_t> order(probs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return probs[a] > probs[b];
  });
  return order;
}

std::string format_prob(float p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", double(p));
  return buf;
}

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\r\n") == std::string::npos) return raw;
  std::string quoted = "\"";
  for (char c : raw) {
    if (c == '"') quoted += "\"\"";
    else quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

int cmd_predict(const std::string& model_path, const std::string& name,
                const std::string& csv_path, const std::string& out_path,
                const std::string& first_col, const std::string& last_col) {
  nmc::LoadedModel loaded = nmc::load_model(model_path);
  if (loaded.model.head_kind() != nmc::HeadKind::kClassifier || !loaded.labels)
    throw data_error(model_path + " does not hold a classifier");
  const nmc::LabelSet& labels = *loaded.labels;

  auto predict_one = [&](std::string_view first, std::string_view last) {
    const nmc::TokenSequence seq =
        nmc::encode(nmc::normalize_name(first, last, loaded.scheme),
                    loaded.vocab, loaded.max_len);
    return loaded.model.classify(seq);
  };

  if (!name.empty()) {
    const std::string trimmed{nmc::uni::trim(name)};
    const size_t cut = trimmed.find_last_of(" \t");
    if (cut == std::string::npos)
      throw std::invalid_argument(
          "--name needs a first and a last name separated by whitespace");
    const std::vector<float> probs = predict_one(
        nmc::uni::trim(trimmed.substr(0, cut)), trimmed.substr(cut + 1));
    for (size_t i : sorted_class_order(probs))
      std::cout << labels.label(static_cast<int>(i)) << " "
                << format_prob(probs[i]) << "\n";
    return 0;
  }

  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + csv_path);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw data_error("cannot write file: " + out_path);

  nmc::CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next_row(row)) throw data_error(csv_path + " has no header row");
  size_t fi = row.size(), li = row.size();
  for (size_t i = 0; i < row.size(); ++i) {
    if (nmc::uni::trim(row[i]) == first_col) fi = i;
    if (nmc::uni::trim(row[i]) == last_col) li = i;
  }
  if (fi == row.size())
    throw data_error("missing column '" + first_col + "' in csv header");
  if (li == row.size())
    throw data_error("missing column '" + last_col + "' in csv header");

  const size_t width = row.size();
  for (size_t i = 0; i < width; ++i) out << csv_field(row[i]) << ",";
  for (size_t k = 0; k < labels.size(); ++k)
    out << "prob_" << labels.label(static_cast<int>(k)) << ",";
  out << "predicted\n";

  while (reader.next_row(row)) {
    if (row.size() < width)
      throw data_error("row " + std::to_string(reader.row_number()) +
                       ": expected " + std::to_string(width) +
                       " fields, got " + std::to_string(row.size()));
    const std::string_view first = nmc::uni::trim(row[fi]);
    const std::string_view last = nmc::uni::trim(row[li]);
    if (first.empty() || last.empty())
      throw data_error("row " + std::to_string(reader.row_number()) +
                       ": empty name field");
    const std::vector<float> probs = predict_one(first, last);
    size_t best = 0;
    for (size_t k = 1; k < probs.size(); ++k)
      if (probs[k] > probs[best]) best = k;
    for (size_t i = 0; i < width; ++i) out << csv_field(row[i]) << ",";
    for (float p : probs) out << format_prob(p) << ",";
    out << labels.label(static_cast<int>(best)) << "\n";
  }
  if (!out.flush()) throw data_error("failed writing file: " + out_path);
  return 0;
}

int cmd_evaluate(const std::string& model_path, CommonDataFlags& data_flags,
                 const std::string& baseline_path,
                 const std::string& out_prefix) {
  nmc::LoadedModel loaded = nmc::load_model(model_path);
  if (loaded.model.head_kind() != nmc::HeadKind::kClassifier || !loaded.labels)
    throw data_error(model_path + " does not hold a classifier");
  const nmc::LabelSet& labels = *loaded.labels;

  const nmc::LoadResult data = load_data(data_flags, labels);
  const auto matrix =
      nmc::confusion_matrix(loaded.model, data.records, loaded.vocab,
                            loaded.scheme, loaded.max_len);
  const nmc::MetricsReport report = nmc::metrics_from_confusion(matrix, labels);
  const std::string table = nmc::render_metrics_table(report);
  std::cout << table;
  if (!out_prefix.empty()) {
    write_text_file(out_prefix + ".report.txt", table);
    write_text_file(out_prefix + ".report.json",
                    nmc::render_metrics_json(report));
  }

  if (!baseline_path.empty()) {
    const auto baseline = nmc::load_baseline_f1(baseline_path);
    const nmc::ImprovementTable improvement =
        nmc::improvement_table(report, baseline);
    const std::string itable = nmc::render_improvement_table(improvement);
    std::cout << "\n" << itable;
    if (!out_prefix.empty())
      write_text_file(out_prefix + ".improvement.txt", itable);
  }
  return 0;
}

int cmd_synth(const std::string& out_path, size_t count, uint64_t seed) {
  const nmc::LabelSet labels = nmc::synthetic_labels();
  nmc::write_records_csv(nmc::make_synthetic(count, seed), labels, out_path);
  std::cout << "records=" << count << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"name-based race/ethnicity classification pipeline"};
  app.require_subcommand(1);

  // train-tokenizer
  auto* tt = app.add_subcommand("train-tokenizer",
                                "train a BPE vocabulary on name data");
  CommonDataFlags tt_data;
  TokenizerFlags tt_tok;
  size_t tt_max_vocab = 500;
  std::string tt_out;
  add_data_flags(tt, tt_data);
  add_tokenizer_scheme_flag(tt, tt_tok);
  tt->add_option("--max-vocab", tt_max_vocab, "total vocabulary budget");
  tt->add_option("--out", tt_out, "vocabulary file to write")->required();

  // pretrain
  auto* pt = app.add_subcommand("pretrain",
                                "masked-LM pretraining on name data");
  CommonDataFlags pt_data;
  TrainFlags pt_train;
  ModelFlags pt_model;
  TokenizerFlags pt_tok;
  std::string pt_vocab, pt_config, pt_out;
  add_data_flags(pt, pt_data);
  add_train_flags(pt, pt_train, false);
  add_model_flags(pt, pt_model);
  add_tokenizer_scheme_flag(pt, pt_tok);
  pt->add_option("--vocab", pt_vocab, "trained vocabulary file")->required();
  pt->add_option("--config", pt_config, "run-config JSON file");
  pt->add_option("--out", pt_out, "model file to write")->required();

  // train
  auto* tr = app.add_subcommand("train", "fine-tune a name classifier");
  CommonDataFlags tr_data;
  TrainFlags tr_train;
  ModelFlags tr_model;
  TokenizerFlags tr_tok;
  std::string tr_vocab, tr_init_lm, tr_config, tr_out;
  add_data_flags(tr, tr_data);
  add_train_flags(tr, tr_train, true);
  add_model_flags(tr, tr_model);
  add_tokenizer_scheme_flag(tr, tr_tok);
  auto* tr_vocab_opt =
      tr->add_option("--vocab", tr_vocab, "trained vocabulary file");
  auto* tr_init_opt = tr->add_option(
      "--init-lm", tr_init_lm, "pretrained LM container to transfer from");
  tr_vocab_opt->excludes(tr_init_opt);
  tr->add_option("--config", tr_config, "run-config JSON file");
  tr->add_option("--out", tr_out, "model file to write")->required();

  // predict
  auto* pr = app.add_subcommand("predict", "classify names with a model");
  std::string pr_model, pr_name, pr_csv, pr_out;
  std::string pr_first = "first_name", pr_last = "last_name";
  pr->add_option("--model", pr_model, "classifier container")->required();
  auto* pr_name_opt =
      pr->add_option("--name", pr_name, "single name, \"First Last\"");
  auto* pr_csv_opt = pr->add_option("--csv", pr_csv, "input CSV of names");
  auto* pr_out_opt = pr->add_option("--out", pr_out, "output CSV path");
  pr->add_option("--first-name-col", pr_first, "first-name column name");
  pr->add_option("--last-name-col", pr_last, "last-name column name");
  pr_name_opt->excludes(pr_csv_opt);
  pr_csv_opt->needs(pr_out_opt);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score a model on labeled data");
  CommonDataFlags ev_data;
  std::string ev_model, ev_baseline, ev_out;
  ev->add_option("--model", ev_model, "classifier container")->required();
  add_data_flags(ev, ev_data);
  ev->add_option("--baseline-f1", ev_baseline,
                 "baseline f1 file, one '<label> <f1>' per line");
  ev->add_option("--out", ev_out, "report file prefix");

  // synth
  auto* sy = app.add_subcommand("synth",
                                "generate a synthetic labeled name CSV");
  std::string sy_out;
  size_t sy_count = 3600;
  uint64_t sy_seed = 42;
  sy->add_option("--out", sy_out, "CSV file to write")->required();
  sy->add_option("--count", sy_count, "number of records");
  sy->add_option("--seed", sy_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*tt)
      return cmd_train_tokenizer(tt_data, tt_tok, tt_max_vocab, tt_out);
    if (*pt)
      return cmd_pretrain(pt_data, pt_train, pt_model, pt_tok, pt_vocab,
                          pt_config, pt_out);
    if (*tr)
      return cmd_train(tr_data, tr_train, tr_model, tr_tok, tr_vocab,
                       tr_init_lm, tr_config, tr_out);
    if (*pr) {
      if (pr_name.empty() && pr_csv.empty()) {
        std::cerr << "predict needs --name or --csv\n";
        return 1;
      }
      return cmd_predict(pr_model, pr_name, pr_csv, pr_out, pr_first,
                         pr_last);
    }
    if (*ev) return cmd_evaluate(ev_model, ev_data, ev_baseline, ev_out);
    if (*sy) return cmd_synth(sy_out, sy_count, sy_seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 1;
}
