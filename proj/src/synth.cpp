#include "castkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "castkit/errors.hpp"
#include "castkit/random.hpp"

namespace castkit {

std::string_view to_string(FaceClass c) {
  switch (c) {
    case FaceClass::kClean: return "clean";
    case FaceClass::kOutlier: return "outlier";
    case FaceClass::kFlipped: return "flipped";
    case FaceClass::kDuplicateIdentity: return "duplicate_identity";
    case FaceClass::kExactDuplicate: return "exact_duplicate";
    case FaceClass::kTestOverlap: return "test_overlap";
  }
  return "clean";
}

void SynthSpec::validate() const {
  auto fraction = [](double f, const char* name) {
    if (!(f >= 0.0 && f <= 1.0))
      throw GenerationError(std::string(name) + " must lie in [0, 1]");
  };
  fraction(outlier_fraction, "outlier_fraction");
  fraction(label_flip_fraction, "label_flip_fraction");
  fraction(duplicate_identity_fraction, "duplicate_identity_fraction");
  fraction(exact_duplicate_fraction, "exact_duplicate_fraction");
  fraction(masked_fraction, "masked_fraction");
  if (outlier_fraction + label_flip_fraction > 1.0)
    throw GenerationError("outlier and flip fractions exceed the folder");
  if (dim < 2) throw GenerationError("dim must be at least 2");
  if (faces_per_identity_range.first < 1 ||
      faces_per_identity_range.first > faces_per_identity_range.second)
    throw GenerationError("bad faces_per_identity_range");
  if (intra_spread < 0.0) throw GenerationError("intra_spread must be >= 0");
  if (!(outlier_max_similarity >= 0.0 && outlier_max_similarity <= 1.0))
    throw GenerationError("outlier_max_similarity must lie in [0, 1]");
  const std::size_t dup = static_cast<std::size_t>(
      std::llround(duplicate_identity_fraction * n_identities));
  if (dup + planted_test_identities > n_identities)
    throw GenerationError("more split and test identities than identities");
}

const FaceTruth* GroundTruth::find(FaceId id) const {
  auto it = std::lower_bound(faces.begin(), faces.end(), id,
                             [](const FaceTruth& f, FaceId k) { return f.face_id < k; });
  if (it == faces.end() || it->face_id != id) return nullptr;
  return &*it;
}

namespace {

using Vec = std::vector<double>;

Vec random_unit(Rng& rng, std::size_t dim) {
  for (;;) {
    Vec v(dim);
    double norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) continue;
    for (double& x : v) x /= norm;
    return v;
  }
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(Vec& v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

// Unit vector orthogonal to p.
Vec random_tangent(Rng& rng, const Vec& p) {
  for (;;) {
    Vec w = random_unit(rng, p.size());
    const double c = dot(w, p);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c * p[i];
    const double n = std::sqrt(dot(w, w));
    if (n < 1e-6) continue;
    for (double& x : w) x /= n;
    return w;
  }
}

// prototype + tangent Gaussian noise of expected norm `spread`.
Vec sample_member(Rng& rng, const Vec& p, double spread) {
  const std::size_t dim = p.size();
  Vec g(dim);
  for (double& x : g) x = rng.normal() * spread / std::sqrt(static_cast<double>(dim - 1));
  const double c = dot(g, p);
  Vec v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = p[i] + g[i] - c * p[i];
  normalize(v);
  return v;
}

Vec sample_lookalike(Rng& rng, const Vec& p, double max_similarity) {
  const double u = rng.uniform(0.0, max_similarity);
  const Vec w = random_tangent(rng, p);
  Vec v(p.size());
  const double s = std::sqrt(1.0 - u * u);
  for (std::size_t i = 0; i < p.size(); ++i) v[i] = u * p[i] + s * w[i];
  return v;
}

struct PendingFace {
  Vec embedding;
  FaceClass label;
};

AttributeSet sample_attributes(Rng& rng, const SynthSpec& spec, Race race,
                               Gender gender, std::uint32_t base_age) {
  AttributeSet a;
  const double offset = rng.uniform(-15.0, 15.0);
  a.age_years = static_cast<std::uint32_t>(
      std::max(1.0, std::round(static_cast<double>(base_age) + offset)));
  a.race = race;
  a.gender = gender;
  a.scenario = rng.uniform() < 0.5 ? Scenario::kControlled : Scenario::kWild;
  a.masked = rng.uniform() < spec.masked_fraction;
  return a;
}

}  // namespace

SynthResult generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n = spec.n_identities;
  const std::size_t dim = spec.dim;

  const double max_cos = std::cos(spec.min_separation_degrees * std::numbers::pi / 180.0);
  std::vector<Vec> prototypes;
  prototypes.reserve(n);
  constexpr std::size_t kMaxAttempts = 10000;
  for (std::size_t k = 0; k < n; ++k) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Vec candidate = random_unit(rng, dim);
      placed = std::all_of(prototypes.begin(), prototypes.end(),
                           [&](const Vec& p) { return dot(p, candidate) < max_cos; });
      if (placed) prototypes.push_back(std::move(candidate));
    }
    if (!placed)
      throw GenerationError("cannot place " + std::to_string(n) +
                            " identities at " +
                            std::to_string(spec.min_separation_degrees) +
                            " degrees separation in dim " + std::to_string(dim));
  }

  // Disjoint roles: split identities first, then planted test identities.
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  rng.shuffle(order.begin(), order.end());
  const std::size_t n_split = static_cast<std::size_t>(
      std::llround(spec.duplicate_identity_fraction * n));
  std::vector<char> is_split(n, 0), is_test(n, 0);
  for (std::size_t i = 0; i < n_split; ++i) is_split[order[i]] = 1;
  for (std::size_t i = 0; i < spec.planted_test_identities; ++i)
    is_test[order[n_split + i]] = 1;

  std::vector<float> rows;
  std::vector<FaceRecord> records;
  GroundTruth truth;
  std::uint64_t next_face = 1;
  std::uint64_t next_split_id = n;

  auto emit_folder = [&](IdentityId identity, std::vector<PendingFace> pending,
                         std::vector<AttributeSet> attributes) {
    for (std::size_t i = 0; i < pending.size(); ++i) {
      FaceRecord rec;
      rec.face_id = FaceId{next_face++};
      rec.identity_id = identity;
      rec.embedding_index = records.size();
      rec.attributes = attributes[i];
      for (double x : pending[i].embedding) rows.push_back(static_cast<float>(x));
      records.push_back(rec);
      truth.faces.push_back({rec.face_id, pending[i].label, identity});
    }
  };

  static constexpr std::array<Race, 4> kRaces{Race::kCaucasian, Race::kEastAsian,
                                               Race::kAfrican, Race::kOther};
  for (std::size_t k = 0; k < n; ++k) {
    const auto [lo, hi] = spec.faces_per_identity_range;
    const std::size_t m = lo + rng.below(hi - lo + 1);
    const auto n_out = static_cast<std::size_t>(std::llround(m * spec.outlier_fraction));
    const auto n_flip = std::min(
        m - n_out, static_cast<std::size_t>(std::llround(m * spec.label_flip_fraction)));
    const Race race = kRaces[rng.below(kRaces.size())];
    const Gender gender = rng.uniform() < 0.5 ? Gender::kMale : Gender::kFemale;
    const auto base_age = static_cast<std::uint32_t>(20 + rng.below(41));

    const FaceClass genuine = is_test[k]    ? FaceClass::kTestOverlap
                              : is_split[k] ? FaceClass::kDuplicateIdentity
                                            : FaceClass::kClean;
    std::vector<PendingFace> pending;
    for (std::size_t i = 0; i < m - n_out - n_flip; ++i)
      pending.push_back({sample_member(rng, prototypes[k], spec.intra_spread), genuine});
    for (std::size_t i = 0; i < n_out; ++i)
      pending.push_back({sample_lookalike(rng, prototypes[k], spec.outlier_max_similarity),
                         is_test[k] ? FaceClass::kTestOverlap : FaceClass::kOutlier});
    for (std::size_t i = 0; i < n_flip && n > 1; ++i) {
      std::size_t other = rng.below(n - 1);
      if (other >= k) ++other;
      pending.push_back({sample_member(rng, prototypes[other], spec.intra_spread),
                         is_test[k] ? FaceClass::kTestOverlap : FaceClass::kFlipped});
    }
    rng.shuffle(pending.begin(), pending.end());
    std::vector<AttributeSet> attrs;
    for (std::size_t i = 0; i < pending.size(); ++i)
      attrs.push_back(sample_attributes(rng, spec, race, gender, base_age));

    if (is_split[k]) {
      const std::size_t half = pending.size() / 2;
      const IdentityId first{k}, second{next_split_id++};
      emit_folder(first, {pending.begin(), pending.begin() + half},
                  {attrs.begin(), attrs.begin() + half});
      emit_folder(second, {pending.begin() + half, pending.end()},
                  {attrs.begin() + half, attrs.end()});
      truth.split_pairs.emplace_back(first, second);
    } else {
      emit_folder(IdentityId{k}, std::move(pending), std::move(attrs));
    }
    if (is_test[k]) {
      truth.test_identities.push_back(IdentityId{k});
      truth.exclusion.identity_ids.push_back(IdentityId{1'000'000'000 + k});
      for (double x : prototypes[k])
        truth.exclusion.centers.push_back(static_cast<float>(x));
    }
  }
  truth.exclusion.dim = dim;

  // Exact duplicates of valid faces get fresh, larger face ids.
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (is_valid_face(truth.faces[i].label)) valid.push_back(i);
  const auto n_dup = static_cast<std::size_t>(
      std::llround(spec.exact_duplicate_fraction * valid.size()));
  for (std::size_t d = 0; d < n_dup && !valid.empty(); ++d) {
    const std::size_t src = valid[rng.below(valid.size())];
    FaceRecord rec = records[src];
    rec.face_id = FaceId{next_face++};
    rec.embedding_index = records.size();
    const std::vector<float> copy(rows.begin() + src * dim,
                                  rows.begin() + (src + 1) * dim);
    rows.insert(rows.end(), copy.begin(), copy.end());
    records.push_back(rec);
    truth.faces.push_back({rec.face_id, FaceClass::kExactDuplicate, rec.identity_id});
  }

  std::sort(truth.test_identities.begin(), truth.test_identities.end());
  auto store = std::make_shared<const EmbeddingStore>(
      EmbeddingStore::from_rows(dim, std::move(rows)));
  // Exclusion rows go through the same float normalisation as the corpus.
  for (std::size_t r = 0; r < truth.exclusion.size(); ++r)
    normalize_in_place({truth.exclusion.centers.data() + r * dim, dim});
  return {Corpus::from_faces(std::move(store), std::move(records)), std::move(truth)};
}

std::size_t CleaningScore::noise_retained() const {
  return per_class[static_cast<std::size_t>(FaceClass::kOutlier)].retained +
         per_class[static_cast<std::size_t>(FaceClass::kFlipped)].retained +
         per_class[static_cast<std::size_t>(FaceClass::kTestOverlap)].retained;
}

CleaningScore score_cleaning(const Corpus& result, const GroundTruth& truth) {
  CleaningScore score;
  std::size_t valid_generated = 0;
  for (const auto& f : truth.faces) {
    ++score.per_class[static_cast<std::size_t>(f.label)].generated;
    if (is_valid_face(f.label)) ++valid_generated;
  }
  std::size_t valid_retained = 0;
  for (const auto& face : result.faces()) {
    const FaceTruth* t = truth.find(face.face_id);
    if (!t)
      throw ConsistencyError("face " + std::to_string(face.face_id.value) +
                             " is not in the ground truth");
    ++score.per_class[static_cast<std::size_t>(t->label)].retained;
    if (is_valid_face(t->label)) ++valid_retained;
  }
  score.retained = result.face_count();
  score.precision = score.retained == 0
                        ? 1.0
                        : static_cast<double>(valid_retained) / score.retained;
  score.recall = valid_generated == 0
                     ? 1.0
                     : static_cast<double>(valid_retained) / valid_generated;

  // A split is unified when both halves keep valid faces and all of them sit
  // in one output folder.
  score.splits_total = truth.split_pairs.size();
  for (const auto& [a, b] : truth.split_pairs) {
    std::optional<IdentityId> home;
    bool seen_a = false, seen_b = false, together = true;
    for (const auto& face : result.faces()) {
      const FaceTruth* t = truth.find(face.face_id);
      if (!is_valid_face(t->label) || (t->origin != a && t->origin != b)) continue;
      (t->origin == a ? seen_a : seen_b) = true;
      if (!home) home = face.identity_id;
      else if (*home != face.identity_id) together = false;
    }
    if (seen_a && seen_b && together) ++score.splits_unified;
  }
  score.split_unification =
      score.splits_total == 0
          ? 1.0
          : static_cast<double>(score.splits_unified) / score.splits_total;

  for (IdentityId test : truth.test_identities) {
    bool retained = false;
    for (const auto& face : result.faces()) {
      if (truth.find(face.face_id)->origin == test) {
        retained = true;
        break;
      }
    }
    if (!retained) ++score.test_identities_removed;
  }
  return score;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  for (const auto& f : truth.faces)
    out << f.face_id.value << '\t' << to_string(f.label) << '\n';
  if (!out) throw IoError(path.string() + ": write failed");
}

void write_split_pairs(const std::filesystem::path& path, const GroundTruth& truth) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  for (const auto& [a, b] : truth.split_pairs) out << a.value << '\t' << b.value << '\n';
}

Corpus exclusion_corpus(const CenterIndex& centers) {
  const std::size_t dim = centers.dim == 0 ? kDefaultEmbeddingDim : centers.dim;
  auto store = std::make_shared<const EmbeddingStore>(
      EmbeddingStore::from_rows(dim, centers.centers));
  std::vector<FaceRecord> faces;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    FaceRecord rec;
    rec.face_id = FaceId{i + 1};
    rec.identity_id = centers.identity_ids[i];
    rec.embedding_index = i;
    faces.push_back(rec);
  }
  return Corpus::from_faces(std::move(store), std::move(faces));
}

SynthSpec parse_synth_spec(const std::string& text) {
  SynthSpec spec;
  std::istringstream in(text);
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string{};
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
  };
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("synth spec: expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "n_identities") spec.n_identities = std::stoull(value);
      else if (key == "faces_min") spec.faces_per_identity_range.first = std::stoull(value);
      else if (key == "faces_max") spec.faces_per_identity_range.second = std::stoull(value);
      else if (key == "dim") spec.dim = std::stoull(value);
      else if (key == "intra_spread") spec.intra_spread = std::stod(value);
      else if (key == "outlier_fraction") spec.outlier_fraction = std::stod(value);
      else if (key == "label_flip_fraction") spec.label_flip_fraction = std::stod(value);
      else if (key == "duplicate_identity_fraction") spec.duplicate_identity_fraction = std::stod(value);
      else if (key == "exact_duplicate_fraction") spec.exact_duplicate_fraction = std::stod(value);
      else if (key == "planted_test_identities") spec.planted_test_identities = std::stoull(value);
      else if (key == "seed") spec.seed = std::stoull(value);
      else if (key == "min_separation_degrees") spec.min_separation_degrees = std::stod(value);
      else if (key == "outlier_max_similarity") spec.outlier_max_similarity = std::stod(value);
      else if (key == "masked_fraction") spec.masked_fraction = std::stod(value);
      else throw ConfigError("synth spec: unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("synth spec: bad value for '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

}  // namespace castkit
