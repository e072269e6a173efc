#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 and simple case-mapping support. Covers one-to-one case
// pairs for Latin (incl. extended), Greek, and Cyrillic; everything else is
// treated as caseless. Invalid byte sequences decode to U+FFFD.
namespace nmc::uni {

inline constexpr uint32_t kReplacementChar = 0xFFFD;

struct DecodedChar {
  uint32_t cp;
  size_t length;  // bytes consumed, >= 1
};

// Decodes the code point starting at `offset`; invalid input yields
// {U+FFFD, 1} so a scan always advances.
DecodedChar decode_one(std::string_view text, size_t offset);

std::vector<uint32_t> decode_utf8(std::string_view text);
void append_utf8(uint32_t cp, std::string& out);
std::string encode_utf8(const std::vector<uint32_t>& cps);

uint32_t to_lower(uint32_t cp);
uint32_t to_upper(uint32_t cp);
bool is_upper(uint32_t cp);
bool is_lower(uint32_t cp);
bool is_whitespace(uint32_t cp);

std::string lower_utf8(std::string_view text);
std::string_view trim(std::string_view text);

}  // namespace nmc::uni
