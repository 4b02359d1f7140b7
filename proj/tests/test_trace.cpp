#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "becaptcha/corpus_io.hpp"
#include "becaptcha/trace.hpp"
#include "oracles.hpp"

using namespace becaptcha;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("becaptcha_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kRecordA =
    R"({"label":"human","session":"s1","device":"d1","screen":[1080,1920],)"
    R"("touch":[[0,0,0],[540,960,250],[1080,1920,500]],)"
    R"("accel":[[0.1,9.8,0.2,0],[0.2,9.7,0.1,250],[0.1,9.8,0.3,500]]})";

const char* kRecordB =
    R"({"label":"human","session":"s2","device":"d1","screen":[1080,1920],)"
    R"("touch":[[100,100,0],[500,500,300]],)"
    R"("accel":[[0.0,9.8,0.0,100]]})";

}  // namespace

TEST_CASE("normalize_touch maps pixels to screen fractions and seconds") {
  std::vector<RawTouchPoint> raw = {{0, 0, 0}, {540, 960, 500}};
  TouchTrace t = normalize_touch(raw, 1080, 1920);
  CHECK(t.points[0].x == 0.0);
  CHECK(t.points[0].y == 0.0);
  CHECK(t.points[0].t == 0.0);
  CHECK(t.points[1].x == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.points[1].y == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.points[1].t == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("normalize_touch keeps zero-length corner swipes") {
  std::vector<RawTouchPoint> raw = {{1080, 1920, 0}, {1080, 1920, 100}};
  TouchTrace t = normalize_touch(raw, 1080, 1920);
  CHECK(t.points[0].x == 1.0);
  CHECK(t.points[0].y == 1.0);
  CHECK(t.points[0].t == 0.0);
  CHECK(t.points[1].x == 1.0);
  CHECK(t.points[1].t == doctest::Approx(0.1));
}

TEST_CASE("normalize_touch clamps overshooting digitizer coordinates") {
  std::vector<RawTouchPoint> raw = {{0, 0, 0}, {1100, 500, 100}};
  TouchTrace t = normalize_touch(raw, 1080, 1920);
  CHECK(t.points[1].x == 1.0);
}

TEST_CASE("normalize_touch rejects degenerate input") {
  CHECK_THROWS_AS(normalize_touch({{0, 0, 0}}, 1080, 1920), Error);
  CHECK_THROWS_AS(normalize_touch({{0, 0, 0}, {1, 1, 0}}, 1080, 1920), Error);  // equal times
  CHECK_THROWS_AS(normalize_touch({{0, 0, 0}, {1, 1, 10}}, 0, 1920), Error);
  try {
    normalize_touch({{0, 0, 0}, {1, 1, 10}}, 0, 1920);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroScreen);
  }
}

TEST_CASE("normalizing an already-normalized trace against a unit screen is the identity") {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    TouchTrace t = oracle::random_touch_trace(rng);
    // express the trace in "pixels" on a 1x1 screen with millisecond clocks
    std::vector<RawTouchPoint> raw;
    for (auto& p : t.points) {
      p.t = std::round(p.t * 1000.0) / 1000.0;  // ms-representable times
      raw.push_back({p.x, p.y, p.t * 1000.0});
    }
    // rounding can collapse adjacent times; skip those rare draws
    bool increasing = true;
    for (std::size_t i = 1; i < raw.size(); ++i)
      if (raw[i].t_ms <= raw[i - 1].t_ms) increasing = false;
    if (!increasing) continue;
    TouchTrace again = normalize_touch(raw, 1.0, 1.0);
    REQUIRE(again.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(again.points[i].x == t.points[i].x);
      CHECK(again.points[i].y == t.points[i].y);
      CHECK(again.points[i].t == doctest::Approx(t.points[i].t).epsilon(1e-12));
    }
  }
}

TEST_CASE("resample keeps a uniformly timed trace intact at its own length") {
  TouchTrace t;
  for (int i = 0; i < 5; ++i)
    t.points.push_back({0.1 * i, 0.2 * i, 0.25 * i});
  Mat m = resample_to_length(t, 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(m(i, 0) == doctest::Approx(0.1 * i).epsilon(1e-12));
    CHECK(m(i, 1) == doctest::Approx(0.2 * i).epsilon(1e-12));
  }
}

TEST_CASE("resample of a 2-point diagonal yields the expected interpolation") {
  TouchTrace t;
  t.points.push_back({0.0, 0.0, 0.0});
  t.points.push_back({1.0, 1.0, 1.0});
  Mat m = resample_to_length(t, 5);
  const double expect[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i < 5; ++i) {
    CHECK(m(i, 0) == doctest::Approx(expect[i]).epsilon(1e-15));
    CHECK(m(i, 1) == doctest::Approx(expect[i]).epsilon(1e-15));
  }
}

TEST_CASE("resample rejects T < 2") {
  TouchTrace t;
  t.points.push_back({0.0, 0.0, 0.0});
  t.points.push_back({1.0, 1.0, 1.0});
  CHECK_THROWS_AS(resample_to_length(t, 1), Error);
}

TEST_CASE("property: resample preserves endpoints exactly for every channel") {
  Rng rng(11);
  for (int rep = 0; rep < 300; ++rep) {
    TouchTrace t = oracle::random_touch_trace(rng);
    const std::size_t T = 2 + rng.uniform_index(60);
    Mat m = resample_to_length(t, T);
    CHECK(m(0, 0) == t.points.front().x);
    CHECK(m(0, 1) == t.points.front().y);
    CHECK(m(T - 1, 0) == t.points.back().x);
    CHECK(m(T - 1, 1) == t.points.back().y);

    AccelTrace a = oracle::random_accel_trace(rng, 1, 50);
    Mat ma = resample_to_length(a, T);
    CHECK(ma(0, 0) == a.samples.front().ax);
    CHECK(ma(T - 1, 2) == a.samples.back().az);
  }
}

TEST_CASE("ingest: canonical file with two records round-trips to two human samples") {
  fs::path dir = make_temp_dir("ingest_ok");
  fs::create_directories(dir / "u1");
  {
    std::ofstream out(dir / "u1" / "session1.jsonl");
    out << kRecordA << "\n" << kRecordB << "\n";
  }
  IngestReport rep = ingest_corpus(dir);
  CHECK(rep.corpus.size() == 2);
  CHECK(rep.warnings.empty());
  for (const auto& s : rep.corpus.samples) {
    CHECK(s.label == SourceLabel::Human);
    CHECK_NOTHROW(s.validate());
  }
  CHECK(rep.corpus.samples[0].meta.session_id == "s1");
  CHECK(rep.corpus.samples[0].touch.points[1].x == doctest::Approx(0.5));
}

TEST_CASE("ingest: corrupt line becomes a warning, not a failure") {
  fs::path dir = make_temp_dir("ingest_partial");
  {
    std::ofstream out(dir / "mixed.jsonl");
    out << kRecordA << "\n";
    out << "{not json at all\n";
  }
  IngestReport rep = ingest_corpus(dir / "mixed.jsonl");
  CHECK(rep.corpus.size() == 1);
  REQUIRE(rep.warnings.size() == 1);
  CHECK(rep.warnings[0].find(":2") != std::string::npos);
}

TEST_CASE("ingest: single-point touch violates the trace invariant and is rejected") {
  fs::path dir = make_temp_dir("ingest_singlepoint");
  {
    std::ofstream out(dir / "bad.jsonl");
    out << R"({"label":"human","session":"s","device":"d","screen":[1080,1920],)"
        << R"("touch":[[10,10,0]],"accel":[[0,9.8,0,0]]})" << "\n";
    out << kRecordA << "\n";
  }
  IngestReport rep = ingest_corpus(dir / "bad.jsonl");
  CHECK(rep.corpus.size() == 1);
  CHECK(rep.warnings.size() == 1);
}

TEST_CASE("ingest: missing path and empty corpus are hard errors") {
  CHECK_THROWS_AS(ingest_corpus("/nonexistent/becaptcha/path"), Error);

  fs::path dir = make_temp_dir("ingest_empty");
  {
    std::ofstream out(dir / "empty.jsonl");
    out << "\n";
  }
  try {
    ingest_corpus(dir);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyCorpus);
    CHECK(e.exit_code() == 3);
  }
}

TEST_CASE("ingest: accel samples outside the touch window are cropped") {
  fs::path dir = make_temp_dir("ingest_crop");
  {
    std::ofstream out(dir / "crop.jsonl");
    out << R"({"label":"human","session":"s","device":"d","screen":[100,100],)"
        << R"("touch":[[0,0,1000],[50,50,1500]],)"
        << R"("accel":[[1,1,1,0],[2,2,2,1200],[3,3,3,2000]]})" << "\n";
  }
  IngestReport rep = ingest_corpus(dir / "crop.jsonl");
  REQUIRE(rep.corpus.size() == 1);
  const auto& accel = rep.corpus.samples[0].accel;
  REQUIRE(accel.size() == 1);  // only the 1200 ms sample lies inside [1000, 1500]
  CHECK(accel.samples[0].ax == 2.0);
  CHECK(accel.samples[0].t == doctest::Approx(0.2));
}

TEST_CASE("ingest: every sample in a messy corpus satisfies the invariants") {
  fs::path dir = make_temp_dir("ingest_messy");
  std::ofstream out(dir / "messy.jsonl");
  Rng rng(1234);
  int expected_good = 0;
  for (int i = 0; i < 60; ++i) {
    const bool corrupt = rng.uniform01() < 0.3;
    if (corrupt) {
      out << R"({"touch":[[0,0,0]],"screen":[10,10],"accel":[[0,0,0,0]]})" << "\n";
    } else {
      TouchTrace t = oracle::random_touch_trace(rng);
      nlohmann::json rec;
      rec["label"] = "human";
      rec["session"] = "s";
      rec["device"] = "d";
      rec["screen"] = {1080, 1920};
      nlohmann::json jt = nlohmann::json::array();
      for (const auto& p : t.points) jt.push_back({p.x * 1080, p.y * 1920, p.t * 1000});
      rec["touch"] = jt;
      nlohmann::json ja = nlohmann::json::array();
      const double dur_ms = t.points.back().t * 1000;
      for (double ts = 0.0; ts <= dur_ms; ts += 5.0) ja.push_back({0.1, 9.8, 0.2, ts});
      rec["accel"] = ja;
      out << rec.dump() << "\n";
      ++expected_good;
    }
  }
  out.close();
  IngestReport rep = ingest_corpus(dir);
  CHECK(static_cast<int>(rep.corpus.size()) == expected_good);
  for (const auto& s : rep.corpus.samples) CHECK_NOTHROW(s.validate());
}

TEST_CASE("ingest: humidb adapter reads the drag task layout") {
  fs::path dir = make_temp_dir("humidb");
  fs::path sess = dir / "user01" / "session1";
  fs::create_directories(sess);
  {
    std::ofstream t(sess / "drag_touch.csv");
    t << "100,200,0.4,0\n540,960,0.5,250\n900,1800,0.4,480\n";
    std::ofstream a(sess / "accelerometer.csv");
    a << "0.1,9.8,0.2,0\n0.2,9.7,0.1,240\n0.15,9.75,0.12,470\n";
    std::ofstream m(sess / "meta.json");
    m << R"({"screen":[1080,1920],"device":"pixel"})";
  }
  IngestReport rep = ingest_corpus(dir, CorpusFormat::HumidbAdapter);
  REQUIRE(rep.corpus.size() == 1);
  const auto& s = rep.corpus.samples[0];
  CHECK(s.meta.device_id == "pixel");
  CHECK(s.touch.size() == 3);
  CHECK(s.touch.points[1].x == doctest::Approx(0.5));
  CHECK(s.accel.size() == 3);
}

TEST_CASE("canonical write/read round-trip preserves structure") {
  fs::path dir = make_temp_dir("roundtrip");
  Corpus corpus;
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    SwipeSample s;
    s.touch = oracle::random_touch_trace(rng);
    s.accel = oracle::random_accel_trace(rng, 2, 40);
    double touch_duration = s.touch.points.back().t;
    // keep accel inside the touch window so cropping is a no-op
    for (auto& a : s.accel.samples) a.t = std::min(a.t, touch_duration);
    s.label = i % 2 == 0 ? SourceLabel::HandcraftedBot : SourceLabel::GanBot;
    s.meta.session_id = "rt";
    corpus.samples.push_back(s);
  }
  write_canonical_corpus(corpus, dir / "bots.jsonl");
  IngestReport rep = ingest_corpus(dir / "bots.jsonl");
  REQUIRE(rep.corpus.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(rep.corpus.samples[i].label == corpus.samples[i].label);
    CHECK(rep.corpus.samples[i].touch.size() == corpus.samples[i].touch.size());
    CHECK(rep.corpus.samples[i].accel.size() == corpus.samples[i].accel.size());
  }
}
