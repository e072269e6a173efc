#include "nmc/data_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "nmc/error.hpp"
#include "nmc/rng.hpp"
#include "nmc/unicode.hpp"

namespace nmc {

LabelSet::LabelSet(std::string name, std::vector<std::string> classes)
    : name_(std::move(name)), classes_(std::move(classes)) {
  if (name_.empty()) throw std::invalid_argument("label set name is empty");
  if (classes_.empty())
    throw std::invalid_argument("label set '" + name_ + "' has no classes");
  for (size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].empty())
      throw std::invalid_argument("label set '" + name_ +
                                  "' contains an empty class label");
    std::string key = uni::lower_utf8(classes_[i]);
    auto [it, inserted] = lower_to_id_.emplace(key, static_cast<int>(i));
    if (!inserted)
      throw std::invalid_argument("duplicate class label: " + classes_[i]);
  }
}

LabelSet LabelSet::race5() {
  return LabelSet("race5", {"nh_white", "hispanic", "nh_black", "api", "aian"});
}

LabelSet LabelSet::ethnicity13() {
  return LabelSet("ethnicity13", {
                                     "GreaterEuropean,British",
                                     "GreaterEuropean,WestEuropean,French",
                                     "GreaterEuropean,WestEuropean,Italian",
                                     "GreaterEuropean,WestEuropean,Hispanic",
                                     "GreaterEuropean,Jewish",
                                     "GreaterEuropean,EastEuropean",
                                     "Asian,IndianSubContinent",
                                     "Asian,GreaterEastAsian,Japanese",
                                     "GreaterAfrican,Muslim",
                                     "Asian,GreaterEastAsian,EastAsian",
                                     "GreaterEuropean,WestEuropean,Nordic",
                                     "GreaterEuropean,WestEuropean,Germanic",
                                     "GreaterAfrican,Africans",
                                 });
}

LabelSet LabelSet::custom(std::string name, std::vector<std::string> classes) {
  return LabelSet(std::move(name), std::move(classes));
}

std::optional<int> LabelSet::find(std::string_view raw) const {
  auto it = lower_to_id_.find(uni::lower_utf8(uni::trim(raw)));
  if (it == lower_to_id_.end()) return std::nullopt;
  return it->second;
}

CsvReader::CsvReader(std::istream& in) : in_(in) {}

bool CsvReader::next_row(std::vector<std::string>& fields) {
  std::streambuf* buf = in_.rdbuf();
  for (;;) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    for (;;) {
      int c = buf->sbumpc();
      if (c == std::char_traits<char>::eof()) {
        if (!saw_any) return false;
        break;
      }
      saw_any = true;
      if (in_quotes) {
        if (c == '"') {
          if (buf->sgetc() == '"') {
            buf->sbumpc();
            field.push_back('"');
          } else {
            in_quotes = false;
          }
        } else {
          field.push_back(static_cast<char>(c));
        }
      } else if (c == '"' && field.empty()) {
        in_quotes = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\n') {
        break;
      } else if (c == '\r') {
        if (buf->sgetc() == '\n') {
          buf->sbumpc();
          break;
        }
        field.push_back('\r');
      } else {
        field.push_back(static_cast<char>(c));
      }
    }
    fields.push_back(std::move(field));
    ++row_number_;
    if (first_row_) {
      first_row_ = false;
      if (fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
    }
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    return true;
  }
}

LoadResult load_labeled_csv(const std::string& path, const LabelSet& labels,
                            const ColumnMap& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + path);
  return load_labeled_csv(in, labels, columns);
}

LoadResult load_labeled_csv(std::istream& in, const LabelSet& labels,
                            const ColumnMap& columns) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next_row(row)) throw data_error("csv has no header row");

  auto col_index = [&](const std::string& want) {
    for (size_t i = 0; i < row.size(); ++i)
      if (uni::trim(row[i]) == want) return i;
    throw data_error("missing column '" + want + "' in csv header");
  };
  const size_t first_col = col_index(columns.first_name);
  const size_t last_col = col_index(columns.last_name);
  const size_t label_col = col_index(columns.label);
  const size_t need = std::max({first_col, last_col, label_col}) + 1;

  LoadResult out;
  while (reader.next_row(row)) {
    if (row.size() < need)
      throw data_error("row " + std::to_string(reader.row_number()) +
                       ": expected at least " + std::to_string(need) +
                       " fields, got " + std::to_string(row.size()));
    std::string_view first = uni::trim(row[first_col]);
    std::string_view last = uni::trim(row[last_col]);
    std::string_view label = uni::trim(row[label_col]);
    if (first.empty() || last.empty()) {
      ++out.skipped_empty;
      continue;
    }
    std::optional<int> id = labels.find(label);
    if (!id) {
      ++out.skipped_label;
      ++out.unknown_labels[uni::lower_utf8(label)];
      continue;
    }
    out.records.push_back({std::string(first), std::string(last), *id});
  }
  if (out.records.empty()) {
    std::string msg = "no usable rows in csv";
    if (!out.unknown_labels.empty()) {
      msg += " (skipped labels:";
      for (const auto& [label, count] : out.unknown_labels)
        msg += " " + label + " x" + std::to_string(count);
      msg += ")";
    }
    throw data_error(msg);
  }
  return out;
}

void print_skip_counters(const LoadResult& result, std::ostream& out) {
  out << "skipped_label=" << result.skipped_label
      << " skipped_empty=" << result.skipped_empty << "\n";
}

std::vector<size_t> class_counts(const std::vector<NameRecord>& records,
                                 const LabelSet& labels) {
  std::vector<size_t> counts(labels.size(), 0);
  for (const NameRecord& r : records)
    ++counts.at(static_cast<size_t>(r.label_id));
  return counts;
}

DatasetSplit split_train_test(const std::vector<NameRecord>& records,
                              double test_fraction, uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw config_error("test fraction must be in (0,1), got " +
                       std::to_string(test_fraction));
  if (records.size() < 2)
    throw data_error("need at least 2 records to split, got " +
                     std::to_string(records.size()));

  std::vector<size_t> order(records.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  deterministic_shuffle(order, rng);

  const auto n_test = static_cast<size_t>(
      std::llround(test_fraction * static_cast<double>(records.size())));
  DatasetSplit split{{}, {}, seed, test_fraction};
  split.test.reserve(n_test);
  split.train.reserve(records.size() - n_test);
  for (size_t k = 0; k < order.size(); ++k)
    (k < n_test ? split.test : split.train).push_back(records[order[k]]);
  return split;
}

}  // namespace nmc
