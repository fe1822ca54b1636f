#include <catch2/catch_amalgamated.hpp>

#include "crowdrate/model_spec.hpp"

using namespace crowdrate;

TEST_CASE("enumerate_variants lists the 18 distinct models in table order") {
  const auto& v = enumerate_variants();
  REQUIRE(v.size() == 18);
  const std::vector<std::string> expected = {
      "ABCDE", "ABCD", "ABCE", "ABDE", "ABC", "ABD", "ACD", "BCD", "AB",
      "AC",    "AD",   "BC",   "BD",   "CD",  "A",   "C",   "D",   "Full"};
  for (std::size_t k = 0; k < expected.size(); ++k) {
    CHECK(v[k].name == expected[k]);
  }
}

TEST_CASE("catalog annotations") {
  const auto& v = enumerate_variants();
  bool saw_abc = false, saw_d = false;
  for (const auto& s : v) {
    if (s.name == "ABC") {
      saw_abc = true;
      CHECK(s.note == "Dawid/Skene");
      CHECK(s.is_dawid_skene());
    }
    if (s.name == "D") {
      saw_d = true;
      CHECK(s.tied_sens_spec);  // the tied-abilities group
      CHECK(s.note == "IRT 3PL");
    }
  }
  CHECK(saw_abc);
  CHECK(saw_d);
}

TEST_CASE("model names round-trip through parsing") {
  for (const auto& s : enumerate_variants()) {
    const auto r = parse_model_name(s.name);
    CHECK_FALSE(r.redirected);
    CHECK(r.spec.name == s.name);
  }
}

TEST_CASE("flag semantics match the tag letters") {
  const auto abde = parse_model_name("ABDE").spec;
  CHECK(abde.no_guessing);
  CHECK(abde.equal_discrimination);
  CHECK_FALSE(abde.equal_difficulty);
  CHECK(abde.tied_sens_spec);
  CHECK(abde.identical_raters);
  CHECK_FALSE(abde.has_rater_params());

  const auto full = parse_model_name("Full").spec;
  CHECK_FALSE(full.no_guessing);
  CHECK(full.has_rater_params());
  CHECK(full.name == "Full");
}

TEST_CASE("redundant tag sets redirect to ABDE") {
  for (const std::string& tags : redundant_tag_sets()) {
    const auto r = canonicalize_redundant(tags);
    INFO("tags = " << tags);
    CHECK(r.redirected);
    CHECK(r.spec.name == "ABDE");
    CHECK(r.requested == tags);
  }
  REQUIRE(redundant_tag_sets().size() == 13);
}

TEST_CASE("distinct tag sets resolve directly") {
  const auto r = canonicalize_redundant("ABC");
  CHECK_FALSE(r.redirected);
  CHECK(r.spec.name == "ABC");

  const auto abe = canonicalize_redundant("ABE");
  CHECK(abe.redirected);
}

TEST_CASE("unknown tags and off-catalog sets are rejected") {
  CHECK_THROWS_AS(canonicalize_redundant("Q"), DataError);
  CHECK_THROWS_AS(canonicalize_redundant("AQ"), DataError);
  // "B" alone appears in neither the distinct catalog nor the redundant list.
  CHECK_THROWS_AS(canonicalize_redundant("B"), DataError);
}

TEST_CASE("tag order and case are normalized") {
  CHECK(canonicalize_redundant("cba").spec.name == "ABC");
  CHECK(canonicalize_redundant("full").spec.name == "Full");
  CHECK(canonicalize_redundant("").spec.name == "Full");
}
