#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace nmc {

struct NameRecord {
  std::string first_name;
  std::string last_name;
  int label_id;
};

class LabelSet {
 public:
  static LabelSet race5();
  static LabelSet ethnicity13();
  // Throws std::invalid_argument on empty list, empty label, or duplicates
  // (compared case-insensitively).
  static LabelSet custom(std::string name, std::vector<std::string> classes);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& classes() const { return classes_; }
  size_t size() const { return classes_.size(); }
  const std::string& label(int id) const { return classes_.at(id); }

  // Case-insensitive lookup of a trimmed raw label.
  std::optional<int> find(std::string_view raw) const;

 private:
  LabelSet(std::string name, std::vector<std::string> classes);

  std::string name_;
  std::vector<std::string> classes_;
  std::map<std::string, int> lower_to_id_;
};

struct ColumnMap {
  std::string first_name = "first_name";
  std::string last_name = "last_name";
  std::string label = "label";
};

struct LoadResult {
  std::vector<NameRecord> records;
  size_t skipped_label = 0;
  size_t skipped_empty = 0;
  // Distinct out-of-set labels (lowercased) with occurrence counts.
  std::map<std::string, size_t> unknown_labels;
};

// Streaming CSV reader: comma-separated, double-quote quoting with ""
// escapes, embedded newlines inside quotes, CRLF or LF row endings, UTF-8
// BOM stripped. Blank rows are skipped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in);

  // Returns false at end of input. Fields are overwritten in place.
  bool next_row(std::vector<std::string>& fields);
  size_t row_number() const { return row_number_; }

 private:
  std::istream& in_;
  size_t row_number_ = 0;
  bool first_row_ = true;
};

// Parses a labeled-name CSV. The header row must contain the three mapped
// columns. Rows whose label is outside the set, or whose name fields are
// empty after trimming, are counted and skipped. Throws data_error on a
// missing file, a missing mapped column, a structurally short row, or when
// no usable rows remain.
LoadResult load_labeled_csv(const std::string& path, const LabelSet& labels,
                            const ColumnMap& columns = {});
LoadResult load_labeled_csv(std::istream& in, const LabelSet& labels,
                            const ColumnMap& columns = {});

// Writes "skipped_label=<n> skipped_empty=<n>".
void print_skip_counters(const LoadResult& result, std::ostream& out);

std::vector<size_t> class_counts(const std::vector<NameRecord>& records,
                                 const LabelSet& labels);

struct DatasetSplit {
  std::vector<NameRecord> train;
  std::vector<NameRecord> test;
  uint64_t seed;
  double test_fraction;
};

// Seeded shuffle, then |test| = round(test_fraction * |records|). Throws
// config_error when the fraction is outside (0,1), data_error when fewer
// than two records are given.
DatasetSplit split_train_test(const std::vector<NameRecord>& records,
                              double test_fraction, uint64_t seed);

}  // namespace nmc
