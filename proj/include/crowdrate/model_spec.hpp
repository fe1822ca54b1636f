#ifndef CROWDRATE_MODEL_SPEC_HPP
#define CROWDRATE_MODEL_SPEC_HPP

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "crowdrate/error.hpp"

namespace crowdrate {

// One point in the model lattice. Tags name the reductions that are active:
//   A: lambda_i = 0 (no guessing)        B: delta_i = 1 (equal discrimination)
//   C: beta_i = 0 (equal difficulty)     D: alpha_spec = alpha_sens (equal error)
//   E: one shared ability for all raters (identical raters)
// The untagged model is "Full".
struct ModelSpec {
  bool no_guessing = false;            // A
  bool equal_discrimination = false;   // B
  bool equal_difficulty = false;       // C
  bool tied_sens_spec = false;         // D
  bool identical_raters = false;       // E
  bool allow_adversarial = false;
  std::string name;  // canonical: "Full" or sorted tag letters
  std::string note;  // catalog annotation ("Dawid/Skene", "IRT 3PL", ...)

  bool has_rater_params() const {
    // ABDE is the one catalog model with item effects and no rater effects.
    return !(no_guessing && equal_discrimination && tied_sens_spec && identical_raters &&
             !equal_difficulty);
  }
  bool is_dawid_skene() const {
    return no_guessing && equal_discrimination && equal_difficulty && !tied_sens_spec &&
           !identical_raters;
  }
};

inline std::string canonical_tag_name(bool a, bool b, bool c, bool d, bool e) {
  std::string s;
  if (a) s += 'A';
  if (b) s += 'B';
  if (c) s += 'C';
  if (d) s += 'D';
  if (e) s += 'E';
  return s.empty() ? "Full" : s;
}

inline ModelSpec make_spec(bool a, bool b, bool c, bool d, bool e, std::string note = "") {
  ModelSpec s;
  s.no_guessing = a;
  s.equal_discrimination = b;
  s.equal_difficulty = c;
  s.tied_sens_spec = d;
  s.identical_raters = e;
  s.name = canonical_tag_name(a, b, c, d, e);
  s.note = std::move(note);
  return s;
}

// The 18 distinct models, in the canonical comparison-table order.
inline const std::vector<ModelSpec>& enumerate_variants() {
  static const std::vector<ModelSpec> variants = [] {
    std::vector<ModelSpec> v;
    v.push_back(make_spec(1, 1, 1, 1, 1));                         // ABCDE
    v.push_back(make_spec(1, 1, 1, 1, 0));                         // ABCD
    v.push_back(make_spec(1, 1, 1, 0, 1));                         // ABCE
    v.push_back(make_spec(1, 1, 0, 1, 1));                         // ABDE
    v.push_back(make_spec(1, 1, 1, 0, 0, "Dawid/Skene"));          // ABC
    v.push_back(make_spec(1, 1, 0, 1, 0, "IRT 1PL"));              // ABD
    v.push_back(make_spec(1, 0, 1, 1, 0));                         // ACD
    v.push_back(make_spec(0, 1, 1, 1, 0));                         // BCD
    v.push_back(make_spec(1, 1, 0, 0, 0, "IRT 1PL + sens/spec"));  // AB
    v.push_back(make_spec(1, 0, 1, 0, 0));                         // AC
    v.push_back(make_spec(1, 0, 0, 1, 0));                         // AD
    v.push_back(make_spec(0, 1, 1, 0, 0));                         // BC
    v.push_back(make_spec(0, 1, 0, 1, 0, "IRT 2PL"));              // BD
    v.push_back(make_spec(0, 0, 1, 1, 0));                         // CD
    v.push_back(make_spec(1, 0, 0, 0, 0, "IRT 2PL + sens/spec"));  // A
    v.push_back(make_spec(0, 0, 1, 0, 0));                         // C
    v.push_back(make_spec(0, 0, 0, 1, 0, "IRT 3PL"));              // D
    v.push_back(make_spec(0, 0, 0, 0, 0, "IRT 3PL + sens/spec"));  // Full
    return v;
  }();
  return variants;
}

// Result of resolving a tag string. Redundant parameterizations redirect to
// the distinct model they collapse to once their non-identifiable freedom is
// pinned; `redirected` flags that the caller did not get what they asked for.
struct CanonicalModel {
  ModelSpec spec;
  bool redirected = false;
  std::string requested;
};

// The thirteen redundant tag sets. Each has identical raters (E) without the
// full complement of item-side pins, so the shared abilities are absorbed by
// the free item effects; the identified content is a single per-item effect,
// which is the no-rater-effects model ABDE.
inline const std::vector<std::string>& redundant_tag_sets() {
  static const std::vector<std::string> sets = {
      "E",  "DE",  "CE",  "CDE",  "BE",  "BDE", "BCE",
      "BCDE", "AE", "ADE", "ACE", "ACDE", "ABE"};
  return sets;
}

inline CanonicalModel canonicalize_redundant(const std::string& tags) {
  bool a = false, b = false, c = false, d = false, e = false;
  std::string upper;
  for (char ch : tags) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (upper != "FULL") {
    for (char ch : upper) {
      switch (ch) {
        case 'A': a = true; break;
        case 'B': b = true; break;
        case 'C': c = true; break;
        case 'D': d = true; break;
        case 'E': e = true; break;
        default:
          throw DataError(std::string("unknown model tag '") + ch + "' in \"" + tags + "\"");
      }
    }
  }
  const std::string canon = canonical_tag_name(a, b, c, d, e);
  for (const ModelSpec& s : enumerate_variants()) {
    if (s.name == canon) return {s, false, canon};
  }
  const auto& redundant = redundant_tag_sets();
  if (std::find(redundant.begin(), redundant.end(), canon) != redundant.end()) {
    CanonicalModel r;
    r.requested = canon;
    r.redirected = true;
    for (const ModelSpec& s : enumerate_variants()) {
      if (s.name == "ABDE") r.spec = s;
    }
    return r;
  }
  // "B" alone is the one tag set outside both catalogs; reject it rather
  // than invent semantics for it.
  throw DataError("model \"" + canon + "\" is not in the catalog; valid models are the 18 "
                  "distinct variants (see `enumerate_variants`) or a redundant tag set that "
                  "redirects to ABDE");
}

// Name -> spec for the 18 distinct models; redundant names redirect.
inline CanonicalModel parse_model_name(const std::string& name) {
  return canonicalize_redundant(name);
}

}  // namespace crowdrate

#endif
