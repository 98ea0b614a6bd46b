#include <algorithm>
#include <cstdlib>
#include <functional>

#include "castkit/errors.hpp"
#include "castkit/fruits.hpp"
#include "castkit/random.hpp"

namespace castkit::fruits {

std::string SliceSpec::name() const {
  switch (kind) {
    case SliceKind::kAll: return "All";
    case SliceKind::kCrossAge10: return "Cross-age-10";
    case SliceKind::kCrossAge20: return "Cross-age-20";
    case SliceKind::kControlled: return "Controlled";
    case SliceKind::kWild: return "Wild";
    case SliceKind::kCrossScene: return "Cross-scene";
    case SliceKind::kControlledMasked: return "Controlled-Masked";
    case SliceKind::kWildMasked: return "Wild-Masked";
    case SliceKind::kAllMasked: return "All-Masked";
    case SliceKind::kRace:
      return "Race-" + std::string(to_string(race.value_or(Race::kOther)));
    case SliceKind::kGender:
      return "Gender-" + std::string(to_string(gender.value_or(Gender::kMale)));
  }
  return "All";
}

std::optional<SliceSpec> SliceSpec::parse(std::string_view name) {
  static const std::pair<std::string_view, SliceKind> kFixed[] = {
      {"All", SliceKind::kAll},
      {"Cross-age-10", SliceKind::kCrossAge10},
      {"Cross-age-20", SliceKind::kCrossAge20},
      {"Controlled", SliceKind::kControlled},
      {"Wild", SliceKind::kWild},
      {"Cross-scene", SliceKind::kCrossScene},
      {"Controlled-Masked", SliceKind::kControlledMasked},
      {"Wild-Masked", SliceKind::kWildMasked},
      {"All-Masked", SliceKind::kAllMasked},
  };
  for (const auto& [label, kind] : kFixed)
    if (name == label) return SliceSpec{kind, std::nullopt, std::nullopt};
  if (name.rfind("Race-", 0) == 0) {
    if (auto race = parse_race(name.substr(5)))
      return SliceSpec{SliceKind::kRace, race, std::nullopt};
  }
  if (name.rfind("Gender-", 0) == 0) {
    if (auto gender = parse_gender(name.substr(7)))
      return SliceSpec{SliceKind::kGender, std::nullopt, gender};
  }
  return std::nullopt;
}

namespace {

struct SliceRules {
  std::function<bool(const AttributeSet&)> face;
  std::function<bool(const AttributeSet&, const AttributeSet&)> pair;
};

bool masked_pair(const AttributeSet& a, const AttributeSet& b,
                 std::optional<Scenario> standard_scenario) {
  if (a.masked == b.masked) return false;
  const AttributeSet& standard = a.masked ? b : a;
  return !standard_scenario || standard.scenario == standard_scenario;
}

SliceRules rules_for(const SliceSpec& slice) {
  auto unmasked = [](const AttributeSet& a) { return !a.masked; };
  auto any_pair = [](const AttributeSet&, const AttributeSet&) { return true; };
  switch (slice.kind) {
    case SliceKind::kAll:
      return {unmasked, any_pair};
    case SliceKind::kCrossAge10:
    case SliceKind::kCrossAge20: {
      const long span = slice.kind == SliceKind::kCrossAge10 ? 10 : 20;
      return {[](const AttributeSet& a) { return !a.masked && a.age_years; },
              [span](const AttributeSet& a, const AttributeSet& b) {
                return std::labs(static_cast<long>(*a.age_years) -
                                 static_cast<long>(*b.age_years)) >= span;
              }};
    }
    case SliceKind::kControlled:
    case SliceKind::kWild: {
      const Scenario s = slice.kind == SliceKind::kControlled ? Scenario::kControlled
                                                              : Scenario::kWild;
      return {[s](const AttributeSet& a) { return !a.masked && a.scenario == s; },
              any_pair};
    }
    case SliceKind::kCrossScene:
      return {[](const AttributeSet& a) { return !a.masked && a.scenario; },
              [](const AttributeSet& a, const AttributeSet& b) {
                return a.scenario != b.scenario;
              }};
    case SliceKind::kControlledMasked:
      return {[](const AttributeSet&) { return true; },
              [](const AttributeSet& a, const AttributeSet& b) {
                return masked_pair(a, b, Scenario::kControlled);
              }};
    case SliceKind::kWildMasked:
      return {[](const AttributeSet&) { return true; },
              [](const AttributeSet& a, const AttributeSet& b) {
                return masked_pair(a, b, Scenario::kWild);
              }};
    case SliceKind::kAllMasked:
      return {[](const AttributeSet&) { return true; },
              [](const AttributeSet& a, const AttributeSet& b) {
                return masked_pair(a, b, std::nullopt);
              }};
    case SliceKind::kRace: {
      const Race r = *slice.race;
      return {[r](const AttributeSet& a) { return !a.masked && a.race == r; }, any_pair};
    }
    case SliceKind::kGender: {
      const Gender g = *slice.gender;
      return {[g](const AttributeSet& a) { return !a.masked && a.gender == g; },
              any_pair};
    }
  }
  return {unmasked, any_pair};
}

void require_attributes(const Corpus& corpus, const SliceSpec& slice) {
  const char* needed = nullptr;
  std::function<bool(const AttributeSet&)> has;
  switch (slice.kind) {
    case SliceKind::kCrossAge10:
    case SliceKind::kCrossAge20:
      needed = "age";
      has = [](const AttributeSet& a) { return a.age_years.has_value(); };
      break;
    case SliceKind::kControlled:
    case SliceKind::kWild:
    case SliceKind::kCrossScene:
    case SliceKind::kControlledMasked:
    case SliceKind::kWildMasked:
      needed = "scenario";
      has = [](const AttributeSet& a) { return a.scenario.has_value(); };
      break;
    case SliceKind::kRace:
      if (!slice.race) throw ProtocolError("race slice without a race");
      needed = "race";
      has = [](const AttributeSet& a) { return a.race.has_value(); };
      break;
    case SliceKind::kGender:
      if (!slice.gender) throw ProtocolError("gender slice without a gender");
      needed = "gender";
      has = [](const AttributeSet& a) { return a.gender.has_value(); };
      break;
    default:
      return;
  }
  for (const auto& f : corpus.faces())
    if (has(f.attributes)) return;
  throw ProtocolError("slice " + slice.name() + " requires the '" + needed +
                      "' attribute, which no face carries");
}

FacePair ordered(FaceId x, FaceId y) { return x < y ? FacePair{x, y} : FacePair{y, x}; }

}  // namespace

PairProtocol build_protocol(const Corpus& corpus, const SliceSpec& slice,
                            std::uint64_t seed, std::size_t impostor_cap) {
  require_attributes(corpus, slice);
  const SliceRules rules = rules_for(slice);
  PairProtocol protocol;
  protocol.slice_name = slice.name();

  for (const auto& folder : corpus.folders()) {
    std::vector<const FaceRecord*> members;
    for (FaceId id : folder.members) {
      const FaceRecord& f = corpus.face(id);
      if (rules.face(f.attributes)) members.push_back(&f);
    }
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j)
        if (rules.pair(members[i]->attributes, members[j]->attributes))
          protocol.genuine_pairs.push_back(
              ordered(members[i]->face_id, members[j]->face_id));
  }
  std::sort(protocol.genuine_pairs.begin(), protocol.genuine_pairs.end());

  std::vector<const FaceRecord*> candidates;
  for (const auto& f : corpus.faces())
    if (rules.face(f.attributes)) candidates.push_back(&f);
  const std::size_t c = candidates.size();
  const double total_pairs = 0.5 * static_cast<double>(c) * static_cast<double>(c - (c > 0));

  auto accept = [&](const FaceRecord* x, const FaceRecord* y) {
    return x->identity_id != y->identity_id && rules.pair(x->attributes, y->attributes);
  };

  auto& impostors = protocol.impostor_pairs;
  if (total_pairs <= static_cast<double>(impostor_cap)) {
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = i + 1; j < c; ++j)
        if (accept(candidates[i], candidates[j]))
          impostors.push_back(ordered(candidates[i]->face_id, candidates[j]->face_id));
  } else {
    Rng rng(seed);
    const std::size_t max_draws = 20 * impostor_cap + 1'000'000;
    std::size_t draws = 0;
    while (impostors.size() < impostor_cap && draws < max_draws) {
      const std::size_t want = impostor_cap - impostors.size();
      for (std::size_t k = 0; k < want && draws < max_draws; ++draws) {
        const std::size_t i = rng.below(c);
        const std::size_t j = rng.below(c);
        if (i == j || !accept(candidates[i], candidates[j])) continue;
        impostors.push_back(ordered(candidates[i]->face_id, candidates[j]->face_id));
        ++k;
      }
      std::sort(impostors.begin(), impostors.end());
      impostors.erase(std::unique(impostors.begin(), impostors.end()), impostors.end());
    }
  }
  std::sort(impostors.begin(), impostors.end());
  return protocol;
}

void validate_protocol(const PairProtocol& protocol, const Corpus& corpus) {
  auto check = [&](const std::vector<FacePair>& pairs, bool genuine) {
    for (const auto& p : pairs) {
      if (p.a == p.b)
        throw ProtocolError("self-pair on face " + std::to_string(p.a.value));
      const bool same = corpus.face(p.a).identity_id == corpus.face(p.b).identity_id;
      if (same != genuine)
        throw ProtocolError("mislabelled pair (" + std::to_string(p.a.value) + ", " +
                            std::to_string(p.b.value) + ")");
    }
  };
  check(protocol.genuine_pairs, true);
  check(protocol.impostor_pairs, false);
}

}  // namespace castkit::fruits
