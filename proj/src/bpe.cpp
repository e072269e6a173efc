#include "nmc/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "nmc/error.hpp"
#include "nmc/unicode.hpp"

namespace nmc {

const char* const Vocabulary::kSpecialNames[Vocabulary::kNumSpecials] = {
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

int Vocabulary::id_of(std::string_view token) const {
  auto it = token_to_id.find(std::string(token));
  return it == token_to_id.end() ? -1 : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= tokens.size())
    throw data_error("token id out of range: " + std::to_string(id));
  return tokens[static_cast<size_t>(id)];
}

void Vocabulary::rebuild_index() {
  token_to_id.clear();
  merge_rank.clear();
  for (size_t i = 0; i < tokens.size(); ++i) {
    auto [it, inserted] = token_to_id.emplace(tokens[i], static_cast<int>(i));
    if (!inserted) throw data_error("duplicate token: " + tokens[i]);
  }
  for (size_t r = 0; r < merges.size(); ++r)
    merge_rank[{merges[r].left, merges[r].right}] = static_cast<int>(r);
}

namespace {

std::vector<std::string> split_segments(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '_') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> split_chars(std::string_view segment) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < segment.size()) {
    uni::DecodedChar d = uni::decode_one(segment, i);
    out.push_back(std::string(segment.substr(i, d.length)));
    i += d.length;
  }
  return out;
}

// Replaces every left-to-right occurrence of (left, right) with result.
void apply_merge(std::vector<std::string>& toks, const std::string& left,
                 const std::string& right, const std::string& result) {
  std::vector<std::string> out;
  out.reserve(toks.size());
  size_t i = 0;
  while (i < toks.size()) {
    if (i + 1 < toks.size() && toks[i] == left && toks[i + 1] == right) {
      out.push_back(result);
      i += 2;
    } else {
      out.push_back(std::move(toks[i]));
      ++i;
    }
  }
  toks = std::move(out);
}

}  // namespace

Vocabulary train_bpe(const std::vector<NormalizedName>& corpus,
                     size_t max_vocab) {
  if (corpus.empty()) throw data_error("tokenizer corpus is empty");

  struct Word {
    std::vector<std::string> toks;
    int64_t freq = 0;
  };
  std::vector<Word> words;
  std::map<std::string, size_t> word_index;
  std::set<std::string> alphabet;

  for (const NormalizedName& name : corpus) {
    for (std::string& seg : split_segments(name.text)) {
      auto [it, inserted] = word_index.emplace(seg, words.size());
      if (inserted) {
        Word w;
        w.toks = split_chars(seg);
        for (const std::string& c : w.toks) alphabet.insert(c);
        words.push_back(std::move(w));
      }
      ++words[it->second].freq;
    }
  }

  Vocabulary vocab;
  vocab.max_vocab = max_vocab;
  for (const char* s : Vocabulary::kSpecialNames) vocab.tokens.push_back(s);
  for (const std::string& c : alphabet) vocab.tokens.push_back(c);
  vocab.alphabet_size = alphabet.size();
  if (max_vocab < vocab.tokens.size())
    throw config_error("max_vocab " + std::to_string(max_vocab) +
                       " cannot hold " + std::to_string(vocab.tokens.size()) +
                       " special and alphabet tokens");
  vocab.rebuild_index();

  using Pair = std::pair<std::string, std::string>;
  struct PairStat {
    int64_t count = 0;
    std::set<size_t> words;
  };
  std::map<Pair, PairStat> pairs;

  auto remove_word = [&](size_t wi) {
    const Word& w = words[wi];
    for (size_t i = 0; i + 1 < w.toks.size(); ++i) {
      auto it = pairs.find({w.toks[i], w.toks[i + 1]});
      if (it == pairs.end()) continue;
      it->second.count -= w.freq;
      it->second.words.erase(wi);
    }
    for (size_t i = 0; i + 1 < w.toks.size(); ++i) {
      auto it = pairs.find({w.toks[i], w.toks[i + 1]});
      if (it != pairs.end() && it->second.words.empty()) pairs.erase(it);
    }
  };
  auto add_word = [&](size_t wi) {
    const Word& w = words[wi];
    for (size_t i = 0; i + 1 < w.toks.size(); ++i) {
      PairStat& st = pairs[{w.toks[i], w.toks[i + 1]}];
      st.count += w.freq;
      st.words.insert(wi);
    }
  };
  for (size_t wi = 0; wi < words.size(); ++wi) add_word(wi);

  while (vocab.tokens.size() < max_vocab) {
    const Pair* best = nullptr;
    int64_t best_count = 0;
    std::string best_concat;
    for (const auto& [p, st] : pairs) {
      if (st.count < 2) continue;
      std::string concat = p.first + p.second;
      if (!best || st.count > best_count ||
          (st.count == best_count && concat < best_concat)) {
        best = &p;
        best_count = st.count;
        best_concat = std::move(concat);
      }
    }
    if (!best) break;

    MergeRule rule{best->first, best->second, best_concat};
    if (vocab.token_to_id.count(rule.result))
      throw data_error("merge collides with existing token: " + rule.result);
    vocab.token_to_id[rule.result] = static_cast<int>(vocab.tokens.size());
    vocab.tokens.push_back(rule.result);
    vocab.merge_rank[{rule.left, rule.right}] =
        static_cast<int>(vocab.merges.size());
    vocab.merges.push_back(rule);

    std::vector<size_t> affected(pairs[{rule.left, rule.right}].words.begin(),
                                 pairs[{rule.left, rule.right}].words.end());
    for (size_t wi : affected) {
      remove_word(wi);
      apply_merge(words[wi].toks, rule.left, rule.right, rule.result);
      add_word(wi);
    }
  }
  return vocab;
}

namespace {

std::vector<std::string> tokenize_segment(std::string_view segment,
                                          const Vocabulary& vocab) {
  std::vector<std::string> toks;
  for (std::string& c : split_chars(segment)) {
    if (vocab.id_of(c) >= 0)
      toks.push_back(std::move(c));
    else
      toks.push_back(Vocabulary::kSpecialNames[Vocabulary::kUnkId]);
  }
  for (;;) {
    int best_rank = std::numeric_limits<int>::max();
    for (size_t i = 0; i + 1 < toks.size(); ++i) {
      auto it = vocab.merge_rank.find({toks[i], toks[i + 1]});
      if (it != vocab.merge_rank.end() && it->second < best_rank)
        best_rank = it->second;
    }
    if (best_rank == std::numeric_limits<int>::max()) break;
    const MergeRule& rule = vocab.merges[static_cast<size_t>(best_rank)];
    apply_merge(toks, rule.left, rule.right, rule.result);
  }
  return toks;
}

}  // namespace

TokenSequence encode_text(std::string_view normalized_text,
                          const Vocabulary& vocab, size_t max_len) {
  if (max_len < 3)
    throw config_error("max_len must be at least 3, got " +
                       std::to_string(max_len));
  std::vector<int32_t> body;
  for (const std::string& seg : split_segments(normalized_text))
    for (const std::string& tok : tokenize_segment(seg, vocab))
      body.push_back(vocab.id_of(tok));
  if (body.size() > max_len - 2) body.resize(max_len - 2);

  TokenSequence seq;
  seq.ids.reserve(max_len);
  seq.ids.push_back(Vocabulary::kClsId);
  seq.ids.insert(seq.ids.end(), body.begin(), body.end());
  seq.ids.push_back(Vocabulary::kSepId);
  seq.length = seq.ids.size();
  seq.ids.resize(max_len, Vocabulary::kPadId);
  seq.mask.assign(max_len, 0);
  std::fill(seq.mask.begin(), seq.mask.begin() + seq.length, 1);
  return seq;
}

TokenSequence encode(const NormalizedName& name, const Vocabulary& vocab,
                     size_t max_len) {
  return encode_text(name.text, vocab, max_len);
}

std::string decode(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  bool upper_started = false;
  for (int32_t id : seq.ids) {
    const std::string& tok = vocab.token(id);
    if (id < static_cast<int32_t>(Vocabulary::kNumSpecials)) continue;
    if (!upper_started) {
      size_t i = 0;
      while (i < tok.size()) {
        uni::DecodedChar d = uni::decode_one(tok, i);
        if (uni::is_upper(d.cp)) {
          if (!out.empty()) out.push_back(' ');
          upper_started = true;
          break;
        }
        if (uni::is_lower(d.cp)) break;
        i += d.length;
      }
    }
    out += tok;
  }
  return out;
}

std::string vocab_to_text(const Vocabulary& vocab) {
  std::ostringstream out;
  out << "bpe-vocab v1 max_vocab=" << vocab.max_vocab << "\n";
  for (size_t i = 0; i < Vocabulary::kNumSpecials; ++i)
    out << "special " << vocab.tokens[i] << "\n";
  for (size_t i = 0; i < vocab.alphabet_size; ++i)
    out << "char " << vocab.tokens[Vocabulary::kNumSpecials + i] << "\n";
  for (const MergeRule& m : vocab.merges)
    out << "merge " << m.left << " " << m.right << "\n";
  return out.str();
}

Vocabulary vocab_from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty vocabulary file");

  Vocabulary vocab;
  {
    std::istringstream header(line);
    std::string magic, version, budget;
    header >> magic >> version >> budget;
    if (magic != "bpe-vocab" || version != "v1" ||
        budget.rfind("max_vocab=", 0) != 0)
      throw data_error("bad vocabulary header: " + line);
    try {
      vocab.max_vocab = std::stoul(budget.substr(10));
    } catch (const std::exception&) {
      throw data_error("bad max_vocab in header: " + line);
    }
  }

  size_t n_special = 0;
  bool saw_char = false, saw_merge = false;
  size_t line_no = 1;
  std::set<std::string> known;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) throw data_error("blank line in vocabulary file");
    std::istringstream row(line);
    std::string kind;
    row >> kind;
    auto fail = [&](const std::string& why) {
      throw data_error("vocabulary line " + std::to_string(line_no) + ": " +
                       why);
    };
    auto at_end = [&] {
      std::string extra;
      return !(row >> extra);
    };
    if (kind == "special") {
      if (saw_char || saw_merge) fail("special after char or merge");
      std::string tok;
      if (!(row >> tok) || !at_end()) fail("expected one token");
      if (n_special >= Vocabulary::kNumSpecials) fail("too many specials");
      if (tok != Vocabulary::kSpecialNames[n_special])
        fail("expected special " +
             std::string(Vocabulary::kSpecialNames[n_special]) + ", got " +
             tok);
      vocab.tokens.push_back(tok);
      known.insert(tok);
      ++n_special;
    } else if (kind == "char") {
      if (saw_merge) fail("char after merge");
      if (n_special != Vocabulary::kNumSpecials) fail("missing specials");
      saw_char = true;
      std::string tok;
      if (!(row >> tok) || !at_end()) fail("expected one character token");
      if (uni::decode_utf8(tok).size() != 1)
        fail("char entry is not a single character: " + tok);
      vocab.tokens.push_back(tok);
      known.insert(tok);
      ++vocab.alphabet_size;
    } else if (kind == "merge") {
      if (n_special != Vocabulary::kNumSpecials) fail("missing specials");
      saw_merge = true;
      std::string left, right;
      if (!(row >> left >> right) || !at_end()) fail("expected two tokens");
      MergeRule rule{left, right, left + right};
      if (!known.count(left)) fail("merge references unknown token " + left);
      if (!known.count(right)) fail("merge references unknown token " + right);
      vocab.tokens.push_back(rule.result);
      known.insert(rule.result);
      vocab.merges.push_back(std::move(rule));
    } else {
      fail("unknown entry kind: " + kind);
    }
  }
  if (n_special != Vocabulary::kNumSpecials)
    throw data_error("vocabulary file is missing special tokens");
  if (vocab.tokens.size() > vocab.max_vocab)
    throw data_error("vocabulary holds " +
                     std::to_string(vocab.tokens.size()) +
                     " tokens, over its max_vocab " +
                     std::to_string(vocab.max_vocab));
  vocab.rebuild_index();
  return vocab;
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write file: " + path);
  out << vocab_to_text(vocab);
  if (!out.flush()) throw data_error("failed writing file: " + path);
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return vocab_from_text(buf.str());
}

}  // namespace nmc
