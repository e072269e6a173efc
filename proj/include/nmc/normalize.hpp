#pragma once

#include <string>
#include <string_view>

namespace nmc {

enum class NormScheme {
  kUnderscoreLower,  // "george_smith"
  kCaseMarked,       // "george SMITH"
};

const char* norm_scheme_name(NormScheme scheme);
NormScheme norm_scheme_from_name(std::string_view name);

struct NormalizedName {
  std::string text;
  NormScheme scheme;
};

// Joins a first/last name pair into the model's input string. Both parts are
// trimmed; whitespace and underscores inside a part are dropped. Throws
// std::invalid_argument when a part is empty after cleanup.
NormalizedName normalize_name(std::string_view first, std::string_view last,
                              NormScheme scheme);

NormalizedName normalize_underscore(std::string_view first,
                                    std::string_view last);
NormalizedName normalize_case_marked(std::string_view first,
                                     std::string_view last);

}  // namespace nmc
