#include "nmc/synthetic.hpp"

#include <fstream>

#include "nmc/error.hpp"
#include "nmc/rng.hpp"

namespace nmc {

LabelSet synthetic_labels() {
  return LabelSet::custom("synthetic", {"class_a", "class_b", "class_c"});
}

std::vector<NameRecord> make_synthetic(size_t n, uint64_t seed) {
  static const char* inventories[3] = {"abcd", "efgh", "ijkl"};
  Rng rng(seed);
  auto part = [&](const char* letters) {
    const size_t len = 4 + rng.below(5);
    std::string s;
    for (size_t i = 0; i < len; ++i) s.push_back(letters[rng.below(4)]);
    return s;
  };
  std::vector<NameRecord> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 3);
    const char* letters = inventories[label];
    out.push_back({part(letters), part(letters), label});
  }
  return out;
}

namespace {

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

}  // namespace

void write_records_csv(const std::vector<NameRecord>& records,
                       const LabelSet& labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write file: " + path);
  out << "first_name,last_name,label\n";
  for (const NameRecord& r : records)
    out << csv_field(r.first_name) << "," << csv_field(r.last_name) << ","
        << csv_field(labels.label(r.label_id)) << "\n";
  if (!out.flush()) throw data_error("failed writing file: " + path);
}

}  // namespace nmc
