#include "nmc/normalize.hpp"

#include <stdexcept>
#include <vector>

#include "nmc/unicode.hpp"

namespace nmc {

namespace {

// Drops whitespace and underscores, applies the case mapping.
std::string clean_part(std::string_view raw, bool upper) {
  std::vector<uint32_t> cps = uni::decode_utf8(raw);
  std::string out;
  for (uint32_t cp : cps) {
    if (uni::is_whitespace(cp) || cp == '_') continue;
    uni::append_utf8(upper ? uni::to_upper(cp) : uni::to_lower(cp), out);
  }
  return out;
}

}  // namespace

const char* norm_scheme_name(NormScheme scheme) {
  switch (scheme) {
    case NormScheme::kUnderscoreLower:
      return "underscore_lower";
    case NormScheme::kCaseMarked:
      return "case_marked";
  }
  throw std::invalid_argument("unknown normalization scheme");
}

NormScheme norm_scheme_from_name(std::string_view name) {
  if (name == "underscore_lower") return NormScheme::kUnderscoreLower;
  if (name == "case_marked") return NormScheme::kCaseMarked;
  throw std::invalid_argument("unknown normalization scheme: " +
                              std::string(name));
}

NormalizedName normalize_name(std::string_view first, std::string_view last,
                              NormScheme scheme) {
  const bool mark_last = scheme == NormScheme::kCaseMarked;
  std::string f = clean_part(first, false);
  std::string l = clean_part(last, mark_last);
  if (f.empty()) throw std::invalid_argument("empty first name");
  if (l.empty()) throw std::invalid_argument("empty last name");
  return {f + (mark_last ? ' ' : '_') + l, scheme};
}

NormalizedName normalize_underscore(std::string_view first,
                                    std::string_view last) {
  return normalize_name(first, last, NormScheme::kUnderscoreLower);
}

NormalizedName normalize_case_marked(std::string_view first,
                                     std::string_view last) {
  return normalize_name(first, last, NormScheme::kCaseMarked);
}

}  // namespace nmc
