#include <stdexcept>

#include "doctest.h"
#include "nmc/normalize.hpp"

using nmc::NormScheme;

TEST_CASE("underscore_lower joins lowercased parts") {
  CHECK(nmc::normalize_name("George", "Smith", NormScheme::kUnderscoreLower)
            .text == "george_smith");
  CHECK(nmc::normalize_underscore("MaryAnn", "O'Neil").text ==
        "maryann_o'neil");
}

TEST_CASE("case_marked lowercases the first and uppercases the last") {
  CHECK(nmc::normalize_name("George", "Smith", NormScheme::kCaseMarked).text ==
        "george SMITH");
  CHECK(nmc::normalize_case_marked("MaryAnn", "O'Neil").text ==
        "maryann O'NEIL");
}

TEST_CASE("inner whitespace and underscores are dropped") {
  CHECK(nmc::normalize_underscore("Mary Ann", "van der Berg").text ==
        "maryann_vanderberg");
  CHECK(nmc::normalize_case_marked("Mary\tAnn", "de_la Cruz").text ==
        "maryann DELACRUZ");
}

TEST_CASE("non-ascii names keep their letters") {
  CHECK(nmc::normalize_case_marked("José", "Núñez").text ==
        "josé NÚÑEZ");
  CHECK(nmc::normalize_underscore("İlker", "Yılmaz").text ==
        "ilker_yılmaz");
}

TEST_CASE("empty name parts are rejected") {
  CHECK_THROWS_AS(nmc::normalize_underscore("", "Smith"),
                  std::invalid_argument);
  CHECK_THROWS_AS(nmc::normalize_underscore("George", "  "),
                  std::invalid_argument);
  CHECK_THROWS_AS(nmc::normalize_case_marked("_ _", "Smith"),
                  std::invalid_argument);
}

TEST_CASE("scheme names round-trip") {
  for (NormScheme s :
       {NormScheme::kUnderscoreLower, NormScheme::kCaseMarked})
    CHECK(nmc::norm_scheme_from_name(nmc::norm_scheme_name(s)) == s);
  CHECK(nmc::norm_scheme_name(NormScheme::kCaseMarked) ==
        std::string("case_marked"));
  CHECK_THROWS_AS(nmc::norm_scheme_from_name("camel"), std::invalid_argument);
}

TEST_CASE("normalized name records its scheme") {
  CHECK(nmc::normalize_case_marked("a", "b").scheme ==
        NormScheme::kCaseMarked);
  CHECK(nmc::normalize_underscore("a", "b").scheme ==
        NormScheme::kUnderscoreLower);
}
