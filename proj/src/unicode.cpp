#include "nmc/unicode.hpp"

#include <algorithm>

namespace nmc::uni {

namespace {

struct CasePair {
  uint32_t from;
  uint32_t to;
};

// upper_to_lower is keyed by uppercase code points, lower_to_upper by
// lowercase ones; the two key sets are disjoint. One-directional oddballs
// (dotted I, dotless i, long s, final sigma) appear on one side only.
struct CaseTables {
  std::vector<CasePair> upper_to_lower;
  std::vector<CasePair> lower_to_upper;
};

struct Builder {
  std::vector<CasePair> u2l;
  std::vector<CasePair> l2u;

  void pair(uint32_t upper, uint32_t lower) {
    u2l.push_back({upper, lower});
    l2u.push_back({lower, upper});
  }
  // Consecutive pairs: upper, then lower = upper + 1.
  void alternating(uint32_t first_upper, uint32_t last_upper) {
    for (uint32_t u = first_upper; u <= last_upper; u += 2) pair(u, u + 1);
  }
  void offset_range(uint32_t first_upper, uint32_t last_upper, uint32_t off) {
    for (uint32_t u = first_upper; u <= last_upper; ++u) pair(u, u + off);
  }
};

CaseTables build_tables() {
  Builder b;

  b.offset_range('A', 'Z', 32);
  // Latin-1 Supplement, skipping the multiplication sign U+00D7. Sharp s has
  // no one-to-one uppercase and stays caseless here.
  b.offset_range(0x00C0, 0x00D6, 32);
  b.offset_range(0x00D8, 0x00DE, 32);
  b.pair(0x0178, 0x00FF);  // Y with diaeresis

  // Latin Extended-A.
  b.alternating(0x0100, 0x012E);
  b.u2l.push_back({0x0130, 0x0069});  // I with dot above -> i
  b.l2u.push_back({0x0131, 0x0049});  // dotless i -> I
  b.alternating(0x0132, 0x0136);
  for (uint32_t u = 0x0139; u <= 0x0147; u += 2) b.pair(u, u + 1);
  b.alternating(0x014A, 0x0176);
  b.alternating(0x0179, 0x017D);
  b.l2u.push_back({0x017F, 0x0053});  // long s -> S

  // Latin Extended-B, the regular stretches.
  b.pair(0x018F, 0x0259);  // schwa
  for (uint32_t u = 0x01CD; u <= 0x01DB; u += 2) b.pair(u, u + 1);
  b.alternating(0x01DE, 0x01EE);
  b.pair(0x01F4, 0x01F5);
  b.alternating(0x01F8, 0x021E);
  b.alternating(0x0222, 0x0232);

  // Latin Extended Additional (covers Vietnamese).
  b.alternating(0x1E00, 0x1E94);
  b.alternating(0x1EA0, 0x1EFE);

  // Greek.
  b.pair(0x0386, 0x03AC);
  b.offset_range(0x0388, 0x038A, 0x25);
  b.pair(0x038C, 0x03CC);
  b.pair(0x038E, 0x03CD);
  b.pair(0x038F, 0x03CE);
  b.offset_range(0x0391, 0x03A1, 32);
  b.offset_range(0x03A3, 0x03AB, 32);
  b.l2u.push_back({0x03C2, 0x03A3});  // final sigma -> Sigma

  // Cyrillic.
  b.offset_range(0x0400, 0x040F, 0x50);
  b.offset_range(0x0410, 0x042F, 32);
  b.alternating(0x0460, 0x0480);
  b.alternating(0x048A, 0x04BE);
  b.pair(0x04C0, 0x04CF);  // palochka
  for (uint32_t u = 0x04C1; u <= 0x04CD; u += 2) b.pair(u, u + 1);
  b.alternating(0x04D0, 0x04FE);

  auto by_from = [](const CasePair& a, const CasePair& c) {
    return a.from < c.from;
  };
  CaseTables t;
  t.upper_to_lower = std::move(b.u2l);
  t.lower_to_upper = std::move(b.l2u);
  std::sort(t.upper_to_lower.begin(), t.upper_to_lower.end(), by_from);
  std::sort(t.lower_to_upper.begin(), t.lower_to_upper.end(), by_from);
  return t;
}

const CaseTables& tables() {
  static const CaseTables t = build_tables();
  return t;
}

const CasePair* find(const std::vector<CasePair>& t, uint32_t cp) {
  auto it = std::lower_bound(
      t.begin(), t.end(), cp,
      [](const CasePair& p, uint32_t v) { return p.from < v; });
  return (it != t.end() && it->from == cp) ? &*it : nullptr;
}

}  // namespace

DecodedChar decode_one(std::string_view text, size_t offset) {
  const auto bytes = reinterpret_cast<const unsigned char*>(text.data());
  const unsigned char b0 = bytes[offset];
  uint32_t cp = 0;
  size_t len = 0;
  if (b0 < 0x80) {
    return {b0, 1};
  } else if ((b0 & 0xE0) == 0xC0) {
    cp = b0 & 0x1F;
    len = 2;
  } else if ((b0 & 0xF0) == 0xE0) {
    cp = b0 & 0x0F;
    len = 3;
  } else if ((b0 & 0xF8) == 0xF0) {
    cp = b0 & 0x07;
    len = 4;
  } else {
    return {kReplacementChar, 1};
  }
  if (offset + len > text.size()) return {kReplacementChar, 1};
  for (size_t k = 1; k < len; ++k) {
    if ((bytes[offset + k] & 0xC0) != 0x80) return {kReplacementChar, 1};
    cp = (cp << 6) | (bytes[offset + k] & 0x3F);
  }
  // Reject overlong encodings and surrogates.
  if (len == 2 && cp < 0x80) return {kReplacementChar, 1};
  if (len == 3 && cp < 0x800) return {kReplacementChar, 1};
  if (len == 4 && cp < 0x10000) return {kReplacementChar, 1};
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
    return {kReplacementChar, 1};
  return {cp, len};
}

std::vector<uint32_t> decode_utf8(std::string_view text) {
  std::vector<uint32_t> out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    DecodedChar d = decode_one(text, i);
    out.push_back(d.cp);
    i += d.length;
  }
  return out;
}

void append_utf8(uint32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode_utf8(const std::vector<uint32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (uint32_t cp : cps) append_utf8(cp, out);
  return out;
}

uint32_t to_lower(uint32_t cp) {
  const CasePair* p = find(tables().upper_to_lower, cp);
  return p ? p->to : cp;
}

uint32_t to_upper(uint32_t cp) {
  const CasePair* p = find(tables().lower_to_upper, cp);
  return p ? p->to : cp;
}

bool is_upper(uint32_t cp) {
  return find(tables().upper_to_lower, cp) != nullptr;
}

bool is_lower(uint32_t cp) {
  return find(tables().lower_to_upper, cp) != nullptr;
}

std::string lower_utf8(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    DecodedChar d = decode_one(text, i);
    append_utf8(to_lower(d.cp), out);
    i += d.length;
  }
  return out;
}

std::string_view trim(std::string_view text) {
  size_t i = 0;
  while (i < text.size()) {
    DecodedChar d = decode_one(text, i);
    if (!is_whitespace(d.cp)) break;
    i += d.length;
  }
  size_t j = text.size();
  while (j > i) {
    size_t k = j - 1;
    while (k > i && (static_cast<unsigned char>(text[k]) & 0xC0) == 0x80) --k;
    DecodedChar d = decode_one(text, k);
    if (k + d.length != j || !is_whitespace(d.cp)) break;
    j = k;
  }
  return text.substr(i, j - i);
}

bool is_whitespace(uint32_t cp) {
  switch (cp) {
    case 0x09:
    case 0x0A:
    case 0x0B:
    case 0x0C:
    case 0x0D:
    case 0x20:
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

}  // namespace nmc::uni
