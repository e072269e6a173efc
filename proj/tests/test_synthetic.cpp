#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "nmc/data_ingest.hpp"
#include "nmc/synthetic.hpp"
#include "testutil.hpp"

using nmc::NameRecord;

namespace {

bool within_inventory(const std::string& s, char lo, char hi) {
  for (char c : s)
    if (c < lo || c > hi) return false;
  return true;
}

}  // namespace

TEST_CASE("synthetic labels") {
  nmc::LabelSet labels = nmc::synthetic_labels();
  CHECK(labels.classes() ==
        std::vector<std::string>{"class_a", "class_b", "class_c"});
}

TEST_CASE("synthetic records respect class inventories and lengths") {
  auto records = nmc::make_synthetic(300, 42);
  REQUIRE(records.size() == 300);
  size_t counts[3] = {0, 0, 0};
  for (const NameRecord& r : records) {
    REQUIRE(r.label_id >= 0);
    REQUIRE(r.label_id < 3);
    counts[r.label_id]++;
    const char lo = char('a' + 4 * r.label_id);
    const char hi = char(lo + 3);
    CHECK(within_inventory(r.first_name, lo, hi));
    CHECK(within_inventory(r.last_name, lo, hi));
    CHECK(r.first_name.size() >= 4);
    CHECK(r.first_name.size() <= 8);
    CHECK(r.last_name.size() >= 4);
    CHECK(r.last_name.size() <= 8);
  }
  CHECK(counts[0] == 100);
  CHECK(counts[1] == 100);
  CHECK(counts[2] == 100);
}

TEST_CASE("synthetic data is seed deterministic") {
  auto a = nmc::make_synthetic(120, 7);
  auto b = nmc::make_synthetic(120, 7);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first_name == b[i].first_name);
    CHECK(a[i].last_name == b[i].last_name);
    CHECK(a[i].label_id == b[i].label_id);
  }
  auto c = nmc::make_synthetic(120, 8);
  bool all_equal = true;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].first_name != c[i].first_name ||
        a[i].last_name != c[i].last_name)
      all_equal = false;
  CHECK(!all_equal);
}

TEST_CASE("synthetic csv round-trips through the loader") {
  auto records = nmc::make_synthetic(90, 3);
  nmc::LabelSet labels = nmc::synthetic_labels();
  testutil::TempDir dir;
  const std::string path = dir.file("synth.csv");
  nmc::write_records_csv(records, labels, path);

  nmc::LoadResult loaded = nmc::load_labeled_csv(path, labels);
  REQUIRE(loaded.records.size() == records.size());
  CHECK(loaded.skipped_label == 0);
  CHECK(loaded.skipped_empty == 0);
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded.records[i].first_name == records[i].first_name);
    CHECK(loaded.records[i].last_name == records[i].last_name);
    CHECK(loaded.records[i].label_id == records[i].label_id);
  }

  const std::string text = testutil::read_file(path);
  CHECK(text.substr(0, text.find('\n')) == "first_name,last_name,label");
}
