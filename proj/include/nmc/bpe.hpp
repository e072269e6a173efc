#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nmc/normalize.hpp"

namespace nmc {

struct MergeRule {
  std::string left;
  std::string right;
  std::string result;  // left + right
};

// Token table: specials at ids 0..4, then the single-character alphabet in
// code-point order, then merged tokens in creation order.
struct Vocabulary {
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kClsId = 2;
  static constexpr int kSepId = 3;
  static constexpr int kMaskId = 4;
  static constexpr size_t kNumSpecials = 5;
  static const char* const kSpecialNames[kNumSpecials];

  std::vector<std::string> tokens;
  size_t alphabet_size = 0;
  std::vector<MergeRule> merges;
  size_t max_vocab = 0;
  std::unordered_map<std::string, int> token_to_id;
  std::map<std::pair<std::string, std::string>, int> merge_rank;

  size_t size() const { return tokens.size(); }
  // -1 when absent.
  int id_of(std::string_view token) const;
  const std::string& token(int id) const;
  bool is_special(int id) {
    return id >= 0 && id < static_cast<int>(kNumSpecials);
  }

  // Rebuilds token_to_id and merge_rank from tokens/merges.
  void rebuild_index();
};

struct TokenSequence {
  std::vector<int32_t> ids;   // [CLS] body [SEP] [PAD]...
  std::vector<int32_t> mask;  // 1 on unpadded positions
  size_t length = 0;          // unpadded length, including [CLS]/[SEP]
};

// Greedy pair merging over the space/underscore-separated segments of the
// corpus. Merging stops when the table reaches max_vocab entries (specials
// and alphabet included) or the best pair occurs fewer than twice. Ties
// break toward the lexicographically smaller concatenation, then the
// smaller (left, right) pair. Throws data_error on an empty corpus,
// config_error when max_vocab cannot hold specials plus alphabet.
Vocabulary train_bpe(const std::vector<NormalizedName>& corpus,
                     size_t max_vocab);

// Characters outside the alphabet become [UNK]; the token body is truncated
// to max_len - 2 before framing. Throws config_error when max_len < 3.
TokenSequence encode(const NormalizedName& name, const Vocabulary& vocab,
                     size_t max_len);
TokenSequence encode_text(std::string_view normalized_text,
                          const Vocabulary& vocab, size_t max_len);

// Concatenates non-special tokens. One space is inserted at the transition
// into the uppercased segment, so case-marked names round-trip; lowercase
// underscore-joined names come back without a separator. Throws data_error
// on an out-of-range id.
std::string decode(const TokenSequence& seq, const Vocabulary& vocab);

std::string vocab_to_text(const Vocabulary& vocab);
// Strict parse; throws data_error on any malformed line, unknown merge
// input, duplicate token, or size over max_vocab.
Vocabulary vocab_from_text(std::string_view text);

void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

}  // namespace nmc
