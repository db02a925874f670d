#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "hrtfprint/corpus.hpp"
#include "hrtfprint/corpus_io.hpp"
#include "test_util.hpp"

using namespace hrtfprint;
using hrtfprint::testing::TempDir;

namespace {

EarRecording make_ear(EarSide side, const std::vector<Position>& positions, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<float> nd;
  EarRecording e;
  e.side = e.source_side = side;
  e.positions = positions;
  e.hrir = Matrix<float>(positions.size(), n);
  for (auto& v : e.hrir.data()) v = nd(rng);
  return e;
}

HrirCorpus make_corpus(std::size_t n_subjects, bool both_ears, std::size_t n = 235, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  HrirCorpus c;
  c.name = "toy";
  c.samplerate_hz = 44100;
  c.radius_m = 1.5;
  for (std::size_t s = 0; s < n_subjects; ++s) {
    Subject subj;
    subj.id = "subj" + std::to_string(s);
    subj.ears.push_back(make_ear(EarSide::left, horizontal_ring_positions(), n, rng));
    if (both_ears) subj.ears.push_back(make_ear(EarSide::right, horizontal_ring_positions(), n, rng));
    c.subjects.push_back(std::move(subj));
  }
  return c;
}

bool bit_identical(const HrirCorpus& a, const HrirCorpus& b) {
  if (a.subjects.size() != b.subjects.size()) return false;
  for (std::size_t s = 0; s < a.subjects.size(); ++s) {
    const auto& ea = a.subjects[s].ears;
    const auto& eb = b.subjects[s].ears;
    if (ea.size() != eb.size()) return false;
    for (std::size_t e = 0; e < ea.size(); ++e) {
      const auto& da = ea[e].hrir.data();
      const auto& db = eb[e].hrir.data();
      if (da.size() != db.size() || std::memcmp(da.data(), db.data(), da.size() * sizeof(float)) != 0) return false;
    }
  }
  return true;
}

// Brute-force reference for position matching: enumerate every candidate
// inside both tolerances and order them by (distance, azimuth, elevation).
std::optional<std::size_t> reference_match(const std::vector<Position>& measured, const Position& target,
                                           double az_tol, double el_tol) {
  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    double daz = std::fabs(measured[i].azimuth_deg - target.azimuth_deg);
    daz = std::min(daz, 360.0 - daz);
    if (daz <= az_tol && std::fabs(measured[i].elevation_deg - target.elevation_deg) <= el_tol) inside.push_back(i);
  }
  if (inside.empty()) return std::nullopt;
  auto key = [&](std::size_t i) {
    return std::tuple(angular_distance_deg(measured[i], target), measured[i].azimuth_deg, measured[i].elevation_deg);
  };
  return *std::min_element(inside.begin(), inside.end(), [&](auto a, auto b) { return key(a) < key(b); });
}

}  // namespace

TEST(Position, AzimuthIsNormalised) {
  EXPECT_DOUBLE_EQ(Position(-30.0, 0.0).azimuth_deg, 330.0);
  EXPECT_DOUBLE_EQ(Position(360.0, 0.0).azimuth_deg, 0.0);
  EXPECT_DOUBLE_EQ(Position(725.0, 0.0).azimuth_deg, 5.0);
  EXPECT_LT(Position(-1e-17, 0.0).azimuth_deg, 360.0);
}

TEST(Position, GreatCircleDistanceOnRingIsAzimuthDifference) {
  EXPECT_NEAR(angular_distance_deg({10.0, 0.0}, {350.0, 0.0}), 20.0, 1e-9);
  EXPECT_NEAR(angular_distance_deg({0.0, 90.0}, {180.0, 90.0}), 0.0, 1e-6);
  EXPECT_NEAR(angular_distance_deg({0.0, 0.0}, {0.0, -0.72}), 0.72, 1e-9);
}

TEST(Validate, RejectsBrokenCorpora) {
  auto c = make_corpus(2, true);
  EXPECT_NO_THROW(validate(c));

  auto dup = c;
  dup.subjects[1].id = dup.subjects[0].id;
  EXPECT_THROW(validate(dup), DataError);

  auto same_side = c;
  same_side.subjects[0].ears[1].side = same_side.subjects[0].ears[1].source_side = EarSide::left;
  EXPECT_THROW(validate(same_side), DataError);

  auto nan = c;
  nan.subjects[0].ears[0].hrir(3, 4) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(validate(nan), DataError);

  auto bad_el = c;
  bad_el.subjects[0].ears[0].positions[0].elevation_deg = 91.0;
  EXPECT_THROW(validate(bad_el), DataError);

  auto rows = c;
  rows.subjects[0].ears[0].positions.pop_back();
  EXPECT_THROW(validate(rows), DataError);

  auto empty = c;
  empty.subjects.clear();
  EXPECT_THROW(validate(empty), DataError);
}

TEST(CorpusIo, MinimalCorpusShapeRoundTrip) {
  TempDir dir("corpus_min");
  auto c = make_corpus(1, false);
  save_corpus(c, dir.path());
  const auto back = load_corpus(dir.path());
  ASSERT_EQ(back.subjects.size(), 1u);
  ASSERT_EQ(back.subjects[0].ears.size(), 1u);
  EXPECT_EQ(back.subjects[0].ears[0].hrir.rows(), 12u);
  EXPECT_EQ(back.subjects[0].ears[0].hrir.cols(), 235u);
  EXPECT_EQ(back.n_samples(), 235u);
}

TEST(CorpusIo, SaveLoadIsBitExact) {
  TempDir dir("corpus_rt");
  auto c = make_corpus(2, true, 235, 99);
  c.subjects[0].ears[0].positions[3].distance_m = std::nullopt;
  c.subjects[1].ears[1].positions[5].distance_m = 2.0;
  save_corpus(c, dir.path());
  const auto back = load_corpus(dir.path());
  EXPECT_EQ(back, c);
  EXPECT_TRUE(bit_identical(back, c));
  EXPECT_EQ(back.radius_m, c.radius_m);
}

TEST(CorpusIo, TwoPayloadFilesPerSubjectWithBothEars) {
  TempDir dir("corpus_files");
  save_corpus(make_corpus(2, true), dir.path());
  std::size_t payloads = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path()))
    if (e.path().extension() == ".f32") ++payloads;
  EXPECT_EQ(payloads, 4u);
  const auto manifest = detail::read_json_file(dir.path() / "manifest.json");
  EXPECT_EQ(manifest["schema_version"], 1);
  EXPECT_EQ(manifest["subjects"][0]["ears"].size(), 2u);
}

TEST(CorpusIo, EmptyCorpusIsRejectedOnSave) {
  TempDir dir("corpus_empty");
  HrirCorpus c;
  c.name = "x";
  c.samplerate_hz = 44100;
  try {
    save_corpus(c, dir.path() / "out");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("empty corpus"), std::string::npos);
  }
}

TEST(CorpusIo, ShortPayloadIsASizeMismatch) {
  TempDir dir("corpus_short");
  save_corpus(make_corpus(1, false), dir.path());
  const auto manifest = detail::read_json_file(dir.path() / "manifest.json");
  const auto file = dir.path() / manifest["subjects"][0]["ears"][0]["file"].get<std::string>();
  auto floats = detail::read_f32_file(file);
  floats.resize(11 * 235);
  detail::write_f32_file(file, floats);
  try {
    load_corpus(dir.path());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("payload size mismatch"), std::string::npos) << e.what();
  }
}

TEST(CorpusIo, MalformedManifestIsADataError) {
  TempDir dir("corpus_bad");
  {
    std::ofstream out(dir.path() / "manifest.json");
    out << "{ \"schema_version\": 1, \"name\": ";
  }
  EXPECT_THROW(load_corpus(dir.path()), DataError);
  {
    std::ofstream out(dir.path() / "manifest.json");
    out << R"({"schema_version": 1, "name": "x", "samplerate_hz": 44100, "method": "measured"})";
  }
  EXPECT_THROW(load_corpus(dir.path()), DataError);
  EXPECT_THROW(load_corpus(dir.path() / "missing"), DataError);
}

TEST(Mirror, AzimuthMapAndFixedPoints) {
  auto c = make_corpus(1, true);
  const auto m = mirror_right_ears(c);
  const auto& ears = m.subjects[0].ears;
  ASSERT_EQ(ears.size(), 2u);
  EXPECT_EQ(ears[0].source_side, EarSide::left);
  EXPECT_EQ(ears[1].source_side, EarSide::right);
  EXPECT_EQ(ears[1].side, EarSide::left);
  // Ring order 0, 30, ..., 330 maps to 0, 330, ..., 30.
  EXPECT_DOUBLE_EQ(ears[1].positions[1].azimuth_deg, 330.0);
  EXPECT_DOUBLE_EQ(ears[1].positions[0].azimuth_deg, 0.0);
  EXPECT_DOUBLE_EQ(ears[1].positions[6].azimuth_deg, 180.0);
  EXPECT_EQ(ears[1].hrir, c.subjects[0].ears[1].hrir);
}

TEST(Mirror, RightEarListedFirstStillEndsSecond) {
  auto c = make_corpus(1, true);
  std::swap(c.subjects[0].ears[0], c.subjects[0].ears[1]);
  const auto m = mirror_right_ears(c);
  EXPECT_EQ(m.subjects[0].ears[0].source_side, EarSide::left);
  EXPECT_EQ(m.subjects[0].ears[1].source_side, EarSide::right);
}

TEST(Mirror, LeftOnlyCorpusIsUnchanged) {
  const auto c = make_corpus(3, false);
  EXPECT_EQ(mirror_right_ears(c), c);
}

TEST(Mirror, AzimuthMapIsAnInvolution) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 360.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = normalize_azimuth(u(rng));
    const double twice = normalize_azimuth(360.0 - normalize_azimuth(360.0 - a));
    EXPECT_NEAR(azimuth_difference_deg(twice, a), 0.0, 1e-9);
  }
}

TEST(SelectPositions, ExactGridInTargetOrder) {
  auto c = make_corpus(1, false);
  auto& ear = c.subjects[0].ears[0];
  // Reverse the stored order; output must still follow the targets.
  std::reverse(ear.positions.begin(), ear.positions.end());
  Matrix<float> rev(ear.hrir.rows(), ear.hrir.cols());
  for (std::size_t r = 0; r < rev.rows(); ++r) {
    const auto src = ear.hrir.row(ear.hrir.rows() - 1 - r);
    std::copy(src.begin(), src.end(), rev.row(r).begin());
  }
  const auto original = ear.hrir;
  ear.hrir = rev;
  const auto sel = select_positions(c, horizontal_ring_positions());
  const auto& out = sel.subjects[0].ears[0];
  ASSERT_EQ(out.positions.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_DOUBLE_EQ(out.positions[i].azimuth_deg, 30.0 * static_cast<double>(i));
  EXPECT_EQ(out.hrir, original);
}

TEST(SelectPositions, SlightlyLowElevationRingMatches) {
  auto c = make_corpus(1, false);
  for (auto& p : c.subjects[0].ears[0].positions) p.elevation_deg = -0.72;
  const auto sel = select_positions(c, horizontal_ring_positions(), kDefaultAzimuthTolerance,
                                    kDefaultElevationTolerance);
  EXPECT_EQ(sel.subjects[0].ears[0].positions.size(), 12u);
}

TEST(SelectPositions, MissingTargetNamesSubjectAndEar) {
  auto c = make_corpus(1, false);
  c.subjects[0].ears[0].positions[4].azimuth_deg = 125.0;  // 120 is gone
  try {
    select_positions(c, horizontal_ring_positions());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("position not found"), std::string::npos);
    EXPECT_NE(msg.find("subj0"), std::string::npos);
    EXPECT_NE(msg.find("120"), std::string::npos);
  }
}

TEST(SelectPositions, OtherRingsAreRejectedByElevationTolerance) {
  auto c = make_corpus(1, false);
  for (auto& p : c.subjects[0].ears[0].positions) p.elevation_deg = 10.0;
  EXPECT_THROW(select_positions(c, horizontal_ring_positions()), DataError);
}

TEST(SelectPositions, CloserCandidateWinsAndTiesGoToLowerAzimuth) {
  const Position target(30.0, 0.0);
  EXPECT_EQ(match_position({{28.0, 0.0}, {31.0, 0.0}}, target, 3.0, 1.0), std::optional<std::size_t>(1));
  EXPECT_EQ(match_position({{32.0, 0.0}, {28.0, 0.0}}, target, 3.0, 1.0), std::optional<std::size_t>(1));
  EXPECT_EQ(match_position({{28.0, 0.0}, {32.0, 0.0}}, target, 3.0, 1.0), std::optional<std::size_t>(0));
}

TEST(SelectPositions, MatchesBruteForceOnRandomCandidateSets) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> jitter_az(-4.0, 4.0), jitter_el(-1.5, 1.5);
  std::uniform_int_distribution<int> count(1, 8), ring(0, 11);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Position> measured;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      // Quantised jitter produces exact ties now and then.
      const double az = 30.0 * ring(rng) + std::round(jitter_az(rng) * 2.0) / 2.0;
      measured.emplace_back(az, std::round(jitter_el(rng) * 2.0) / 2.0);
    }
    const Position target(30.0 * ring(rng), 0.0);
    const auto got = match_position(measured, target, 3.0, 1.0);
    const auto want = reference_match(measured, target, 3.0, 1.0);
    ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
    if (got) {
      EXPECT_EQ(measured[*got], measured[*want]) << "trial " << trial;
    }
  }
}

TEST(SelectPositions, IndependentOfStoredOrder) {
  auto c = make_corpus(2, true, 64, 8);
  const auto reference = select_positions(c, horizontal_ring_positions());
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto shuffled = c;
    for (auto& s : shuffled.subjects)
      for (auto& e : s.ears) {
        std::vector<std::size_t> perm(e.positions.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        EarRecording copy = e;
        for (std::size_t i = 0; i < perm.size(); ++i) {
          copy.positions[i] = e.positions[perm[i]];
          const auto src = e.hrir.row(perm[i]);
          std::copy(src.begin(), src.end(), copy.hrir.row(i).begin());
        }
        e = copy;
      }
    EXPECT_EQ(select_positions(shuffled, horizontal_ring_positions()), reference);
  }
}
