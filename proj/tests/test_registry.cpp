#include <doctest.h>

#include <limits>

#include "codec/envelope.hpp"
#include "support/expect.hpp"
#include "support/world.hpp"

using namespace facekey;
using namespace facekey::registry;
using namespace facekey::testing;

namespace {

Timestamp t(std::int64_t s) { return Timestamp{1'700'000'000 + s}; }

// Exhaustive scan: every active identity, min over its embeddings, ties by
// code text, then the two thresholds.
MatchResult linear_scan(const CodeIndex& index, const faceml::EigenfaceModel& model,
                        const MatchSettings& settings, const faceml::FaceRaster& raster) {
  const auto q = faceml::project(model, raster);
  if (q.dffs > settings.face) return NotAFace{q.dffs};
  const IdentityRecord* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [id, rec] : index.records()) {
    if (rec.merged_into) continue;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& e : rec.embeddings) {
      double s = 0;
      for (std::size_t i = 0; i < q.weights.size(); ++i) {
        const double diff = q.weights[i] - e.embedding.weights[i];
        s += diff * diff;
      }
      d = std::min(d, std::sqrt(s));
    }
    if (!best || d < best_d || (d == best_d && rec.code_text < best->code_text)) {
      best = &rec;
      best_d = d;
    }
  }
  if (!best) return Unrecognized{};
  if (best_d <= settings.accept) return Recognized{best->code, best_d};
  return Unrecognized{best_d};
}

bool same(const MatchResult& a, const MatchResult& b) {
  if (a.index() != b.index()) return false;
  if (auto* x = std::get_if<Recognized>(&a)) {
    const auto& y = std::get<Recognized>(b);
    return x->code == y.code && std::abs(x->distance - y.distance) <= 1e-12;
  }
  if (auto* x = std::get_if<Unrecognized>(&a)) {
    const auto& y = std::get<Unrecognized>(b);
    if (x->best_distance.has_value() != y.best_distance.has_value()) return false;
    return !x->best_distance || std::abs(*x->best_distance - *y.best_distance) <= 1e-12;
  }
  return std::abs(std::get<NotAFace>(a).dffs - std::get<NotAFace>(b).dffs) <= 1e-12;
}

struct Fixture {
  Corpus corpus{12, 16, 1234};
  TrainedModel trained = train_on(corpus, 12, 4);
  Stack stack{"n1", trained.model, settings_of(trained)};
};

}  // namespace

TEST_CASE("enroll creates one identity and one image") {
  Fixture f;
  CHECK(std::holds_alternative<Unrecognized>(f.stack.registry.identify(f.corpus.raster(0))));
  CHECK_FALSE(std::get<Unrecognized>(f.stack.registry.identify(f.corpus.raster(0))).best_distance);

  const auto raster = f.corpus.raster(0);
  const auto code = f.stack.registry.enroll(raster, person("Ada"), t(0));
  CHECK(f.stack.registry.index().active_count() == 1);
  CHECK(f.stack.registry.images().size() == 1);
  CHECK(f.stack.replicator.log().size() == 1);
  CHECK(f.stack.replicator.log()[0].origin_seq == 1);

  const auto r = f.stack.registry.identify(raster);
  REQUIRE(std::holds_alternative<Recognized>(r));
  CHECK(std::get<Recognized>(r).code == code);
  CHECK(std::get<Recognized>(r).distance == 0.0);

  try {
    f.stack.registry.enroll(raster, person("Ada again"), t(1));
    FAIL("expected DuplicateIdentity");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateIdentity);
    CHECK(e.detail() == code.render());
  }
  CHECK(f.stack.registry.index().active_count() == 1);
  CHECK(code_of([&] { f.stack.registry.enroll(f.corpus.raster(1), person(""), t(2)); }) ==
        ErrorCode::ValidationError);
}

TEST_CASE("colliding sign patterns get seq 0 and 1") {
  Corpus corpus(8, 16, 77);
  auto trained = train_on(corpus, 8, 3, 4);  // 4 components: 16 sign patterns
  auto settings = settings_of(trained);
  settings.face = std::numeric_limits<double>::infinity();
  Stack stack("n1", trained.model, settings);

  const auto first = corpus.raster(0);
  const auto e1 = faceml::project(*trained.model, first);
  const auto c1 = stack.registry.enroll(first, person("one"), t(0));
  CHECK(c1.seq() == 0);

  // Brute-force search over fresh identities for a matching sign pattern.
  std::optional<faceml::FaceRaster> second;
  for (int tries = 0; tries < 2000 && !second; ++tries) {
    const auto candidate = corpus.raster(corpus.add_identity());
    const auto e2 = faceml::project(*trained.model, candidate);
    if (codec::quantize_signs(e2.weights) == codec::quantize_signs(e1.weights) &&
        faceml::embedding_distance(e1, e2) > settings.accept) {
      second = candidate;
    }
  }
  REQUIRE(second);
  const auto c2 = stack.registry.enroll(*second, person("two"), t(1));
  CHECK(c2.quantization() == c1.quantization());
  CHECK(c2.seq() == 1);
  CHECK(c1.render() != c2.render());
}

TEST_CASE("mean face is unrecognized when every enrollment lies beyond theta_accept") {
  Fixture f;
  for (std::size_t id = 0; id < 5; ++id) f.stack.registry.enroll(f.corpus.raster(id), person("p"), t(id));
  const auto& model = *f.trained.model;
  for (const auto& [id, rec] : f.stack.registry.index().records()) {
    double norm = 0;
    for (double w : rec.embeddings[0].embedding.weights) norm += w * w;
    REQUIRE(std::sqrt(norm) > f.stack.registry.settings().accept);
  }
  const faceml::FaceRaster mean(model.raster_size(), std::vector<double>(model.mean().begin(), model.mean().end()));
  CHECK(std::holds_alternative<Unrecognized>(f.stack.registry.identify(mean)));
}

TEST_CASE("non-faces are rejected") {
  Fixture f;
  std::mt19937_64 rng(3);
  const auto noise = random_raster(rng, 16);
  const auto r = f.stack.registry.identify(noise);
  REQUIRE(std::holds_alternative<NotAFace>(r));
  CHECK(std::get<NotAFace>(r).dffs > f.stack.registry.settings().face);
  CHECK(code_of([&] { f.stack.registry.enroll(noise, person("x"), t(0)); }) == ErrorCode::NotAFace);
  CHECK(code_of([&] { f.stack.registry.identify(random_raster(rng, 8)); }) == ErrorCode::RasterMismatch);
}

TEST_CASE("identify equals the exhaustive linear scan") {
  Fixture f;
  for (std::size_t id = 0; id < 10; ++id) f.stack.registry.enroll(f.corpus.raster(id), person("p"), t(id));
  for (std::size_t id = 0; id < 4; ++id) {
    const auto code = f.stack.registry.index().active()[id]->code;
    f.stack.registry.append_face_image(code, f.corpus.raster(id), t(100 + id));
  }
  std::mt19937_64 rng(99);
  for (int radius : {48, 8, 0}) {
    auto settings = f.stack.registry.settings();
    settings.hamming_radius = radius;
    f.stack.registry.set_settings(settings);
    int mismatches = 0;
    for (int q = 0; q < 300; ++q) {
      const auto raster = f.corpus.raster(rng() % f.corpus.bases.size());
      const auto ours = f.stack.registry.identify(raster);
      const auto oracle = linear_scan(f.stack.registry.index(), *f.trained.model, settings, raster);
      if (!same(ours, oracle)) ++mismatches;
    }
    if (radius == 48) CHECK(mismatches == 0);
    MESSAGE("hamming radius " << radius << ": " << mismatches << " / 300 differ from the linear scan");
  }
}

TEST_CASE("append, lookup ordering and personal updates") {
  Fixture f;
  const auto code = f.stack.registry.enroll(f.corpus.raster(0), person("A"), t(50));
  CHECK(code_of([&] { f.stack.registry.lookup(codec::FaceOutputCode::from_parts(1, 1)); }) == ErrorCode::UnknownCode);

  const auto drifted = f.corpus.raster(0);
  const auto before = std::get<Recognized>(f.stack.registry.identify(drifted)).distance;
  std::vector<std::int64_t> times{80, 10, 60};
  for (auto s : times) f.stack.registry.append_face_image(code, s == 80 ? drifted : f.corpus.raster(0), t(s));
  const auto after = f.stack.registry.identify(drifted);
  REQUIRE(std::holds_alternative<Recognized>(after));
  CHECK(std::get<Recognized>(after).distance <= before);
  CHECK(std::get<Recognized>(after).distance == 0.0);

  const auto found = f.stack.registry.lookup(code);
  CHECK(found.images.size() == 4);
  std::vector<std::int64_t> expect{50, 80, 10, 60};
  std::sort(expect.begin(), expect.end());
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(found.images[i].captured_at == t(expect[i]));
  CHECK(found.identity.embeddings.size() == 4);
  CHECK(found.identity.updated_at == t(80));

  auto p = person("B");
  p.attributes["salary"] = "100";
  f.stack.registry.update_personal(code, p, t(90));
  CHECK(f.stack.registry.lookup(code).identity.personal.name == "B");
  f.stack.registry.update_personal(code, person("C"), t(91));
  CHECK(f.stack.registry.lookup(code).identity.personal.name == "C");
  CHECK(f.stack.registry.lookup(code).identity.personal.attributes.empty());
  CHECK(code_of([&] { f.stack.registry.update_personal(code, person(""), t(92)); }) == ErrorCode::ValidationError);
  CHECK(code_of([&] { f.stack.registry.append_face_image(codec::FaceOutputCode::from_parts(5, 5), drifted, t(1)); }) ==
        ErrorCode::UnknownCode);
}

TEST_CASE("index snapshot: no plaintext codes, bit-exact reload") {
  Fixture f;
  std::vector<std::string> codes;
  for (std::size_t id = 0; id < 6; ++id) {
    codes.push_back(f.stack.registry.enroll(f.corpus.raster(id), person("Person " + std::to_string(id)), t(id)).render());
  }
  const auto snap = f.stack.registry.index().snapshot();
  const std::string haystack(snap.begin(), snap.end());
  CHECK(haystack.rfind("FCIX", 0) == 0);
  for (const auto& c : codes) {
    CHECK(haystack.find(c) == std::string::npos);
    CHECK(haystack.find(c.substr(3, 16)) == std::string::npos);
  }
  CHECK(haystack.find("Person") == std::string::npos);

  CodeIndex reloaded(test_key());
  reloaded.load_snapshot(snap);
  CHECK(reloaded.snapshot() == snap);
  CHECK(reloaded.active_count() == 6);
  CHECK(reloaded.find_active(codec::parse_code(codes[2]))->personal.name == "Person 2");

  auto wrong = test_key();
  wrong[3] ^= 0x40;
  CodeIndex other(wrong);
  CHECK(code_of([&] { other.load_snapshot(snap); }) == ErrorCode::AuthenticationFailure);
  auto cut = snap;
  cut.resize(cut.size() - 3);
  CodeIndex truncated(test_key());
  CHECK(code_of([&] { truncated.load_snapshot(cut); }) == ErrorCode::StorageFailure);
}

TEST_CASE("image store persists PGM files and a manifest") {
  TempDir dir("images");
  Corpus corpus(2, 16, 5);
  const auto owner = codec::FaceOutputCode::from_parts(0xABCDEF, 2);
  faceml::FaceRaster r0 = corpus.raster(0), r1 = corpus.raster(1);
  {
    ImageStore store(dir.path());
    CHECK(store.add(owner, r0, t(20), "cam-1") == 1);
    CHECK(store.add(owner, r1, t(10), "cam-2") == 2);
    CHECK(code_of([&] { store.add(owner, r1, t(10), "has space"); }) == ErrorCode::ValidationError);
  }
  CHECK(std::filesystem::exists(dir / "1.pgm"));
  ImageStore again(dir.path());
  CHECK(again.size() == 2);
  const auto list = again.for_owner(owner);
  REQUIRE(list.size() == 2);
  CHECK(list[0].image_id == 2);
  CHECK(list[0].source == "cam-2");
  // PGM stores 8-bit samples.
  for (std::size_t i = 0; i < r0.dimension(); ++i) CHECK(std::abs(again.find(1)->raster.pixels()[i] - r0.pixels()[i]) <= 0.5 / 255 + 1e-12);
  CHECK(again.add(owner, r0, t(30), "cam-1") == 3);
}
