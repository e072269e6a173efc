#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nmc/data_ingest.hpp"

namespace nmc {

// Three classes with disjoint letter inventories: class_a draws from
// {a,b,c,d}, class_b from {e,f,g,h}, class_c from {i,j,k,l}. First and last
// names are 4 to 8 letters; labels rotate round-robin so counts stay
// balanced. Deterministic per seed.
LabelSet synthetic_labels();
std::vector<NameRecord> make_synthetic(size_t n, uint64_t seed);

void write_records_csv(const std::vector<NameRecord>& records,
                       const LabelSet& labels, const std::string& path);

}  // namespace nmc
