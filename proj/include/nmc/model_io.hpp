#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "nmc/bpe.hpp"
#include "nmc/data_ingest.hpp"
#include "nmc/normalize.hpp"
#include "nmc/transformer.hpp"

namespace nmc {

// IEEE CRC-32 (reflected 0xEDB88320).
uint32_t crc32(std::string_view data);

struct LoadedModel {
  EncoderModel model;
  Vocabulary vocab;
  NormScheme scheme;
  size_t max_len;
  std::optional<LabelSet> labels;  // classifier models carry their label set
};

// Single-file container: "NMC1" magic, little-endian u32 metadata length,
// JSON metadata (head kind, config, tokenizer scheme and max_len, embedded
// vocabulary text, label set, weight manifest), the raw float32
// little-endian weight buffers in manifest order, and a trailing CRC-32 of
// everything before it.
void save_model(const EncoderModel& model, const Vocabulary& vocab,
                NormScheme scheme, size_t max_len,
                const std::optional<LabelSet>& labels,
                const std::string& path);

// Verifies the checksum before parsing and validates the metadata against
// the weight payload; throws data_error on any mismatch.
LoadedModel load_model(const std::string& path);

}  // namespace nmc
