#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "mstf/errors.hpp"
#include "mstf/trajdata.hpp"

using namespace mstf;

namespace {

std::string write_temp_csv(const std::string& name, const std::string& content) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream f(path);
  f << content;
  return path;
}

std::string make_track_csv(int64_t track, int frames, int64_t frame0 = 0) {
  std::string s = "track_id,frame,x,y\n";
  for (int i = 0; i < frames; ++i) {
    s += std::to_string(track) + "," + std::to_string(frame0 + i) + "," +
         std::to_string(i * 0.5) + "," + std::to_string(i * 0.25) + "\n";
  }
  return s;
}

}  // namespace

TEST_CASE("gen_synthetic: lane-keep at 10 m/s and 5 Hz steps exactly (2, 0)") {
  ManeuverSpec spec;
  spec.kind = ManeuverKind::lane_keep;
  spec.speed_min = spec.speed_max = 10.0;
  spec.noise_sigma = 0.0;
  Rng rng(1);
  std::vector<Sample> samples = gen_synthetic(spec, 3, 15, 25, 5.0, rng);
  REQUIRE(samples.size() == 3);
  for (const Sample& s : samples) {
    REQUIRE(s.history.size() == 15);
    REQUIRE(s.future.size() == 25);
    std::vector<Pt> all = s.history;
    all.insert(all.end(), s.future.begin(), s.future.end());
    for (size_t i = 1; i < all.size(); ++i) {
      Pt d = all[i] - all[i - 1];
      CHECK(d.x == doctest::Approx(2.0).epsilon(1e-12));
      CHECK(d.y == 0.0);
    }
  }
}

TEST_CASE("gen_synthetic: noiseless left change moves exactly the lateral displacement") {
  ManeuverSpec spec;
  spec.kind = ManeuverKind::left_change;
  spec.lateral = 3.5;
  spec.noise_sigma = 0.0;
  Rng rng(2);
  std::vector<Sample> samples = gen_synthetic(spec, 20, 20, 30, 10.0, rng);
  for (const Sample& s : samples) {
    const double dy = s.future.back().y - s.history.front().y;
    CHECK(std::abs(dy - 3.5) < 1e-9);
  }

  spec.kind = ManeuverKind::right_change;
  std::vector<Sample> right = gen_synthetic(spec, 20, 20, 30, 10.0, rng);
  for (const Sample& s : right) {
    CHECK(std::abs((s.future.back().y - s.history.front().y) + 3.5) < 1e-9);
  }
}

TEST_CASE("gen_synthetic: noise sigma shows up as sqrt(2)*sigma step-displacement spread") {
  ManeuverSpec spec;
  spec.kind = ManeuverKind::lane_keep;
  spec.speed_min = spec.speed_max = 10.0;
  spec.noise_sigma = 0.1;
  Rng rng(42);
  std::vector<Sample> samples = gen_synthetic(spec, 1000, 10, 10, 10.0, rng);

  // Consecutive positions differ by v*dt plus the difference of two i.i.d.
  // noises, so each coordinate has std sqrt(2)*sigma around its mean.
  double sum = 0.0, sum2 = 0.0;
  int64_t n = 0;
  for (const Sample& s : samples) {
    std::vector<Pt> all = s.history;
    all.insert(all.end(), s.future.begin(), s.future.end());
    for (size_t i = 1; i < all.size(); ++i) {
      const double dy = all[i].y - all[i - 1].y;  // mean 0 by construction
      sum += dy;
      sum2 += dy * dy;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sum2 / static_cast<double>(n) - mean * mean;
  const double expected = 0.1 * std::sqrt(2.0);
  CHECK(std::sqrt(var) == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("ingest_csv: window counts at exact track lengths") {
  const std::string p50 = write_temp_csv("mstf_t50.csv", make_track_csv(7, 50));
  std::vector<Sample> one = ingest_csv(p50, 20, 30, 50);
  CHECK(one.size() == 1);
  CHECK(one[0].track_id == 7);
  CHECK(one[0].history.size() == 20);
  CHECK(one[0].future.size() == 30);

  const std::string p49 = write_temp_csv("mstf_t49.csv", make_track_csv(7, 49));
  CHECK(ingest_csv(p49, 20, 30, 50).empty());

  // Argoverse-shaped: 10 Hz, 2 s history, 3 s future.
  const std::string parg = write_temp_csv("mstf_arg.csv", make_track_csv(1, 50));
  std::vector<Sample> arg = ingest_csv(parg, 20, 30, 1);
  CHECK(arg.size() == 1);

  std::filesystem::remove(p50);
  std::filesystem::remove(p49);
  std::filesystem::remove(parg);
}

TEST_CASE("ingest_csv: stride and gap handling") {
  std::string content = "track_id,frame,x,y\n";
  for (int i = 0; i < 12; ++i) {
    int frame = i < 6 ? i : i + 5;  // gap of 5 frames in the middle
    content += "3," + std::to_string(frame) + ",1.0,2.0\n";
  }
  const std::string path = write_temp_csv("mstf_gap.csv", content);
  IngestReport rep;
  std::vector<Sample> samples = ingest_csv(path, 4, 4, 1, &rep);
  // Windows of length 8 starting at 0..4 all straddle the gap.
  CHECK(samples.empty());
  CHECK(rep.windows_discarded_gap == 5);
  CHECK(rep.rows_malformed == 0);
  std::filesystem::remove(path);
}

TEST_CASE("ingest_csv: per-row diagnostics for malformed rows") {
  const std::string path = write_temp_csv("mstf_bad.csv",
                                          "track_id,frame,x,y\n"
                                          "1,0,0.0,0.0\n"
                                          "1,1,abc,0.0\n"     // non-numeric x
                                          "1,5,0.2,0.2\n"
                                          "1,2,0.3,0.3\n"     // non-monotonic frame
                                          "oops,6,0.3,0.3\n"  // non-integer id
                                          "1,6,0.4\n"         // too few fields
                                          "1,6,0.4,0.4\n");
  IngestReport rep;
  std::vector<Sample> samples = ingest_csv(path, 1, 1, 1, &rep);
  CHECK(rep.rows_total == 7);
  CHECK(rep.rows_malformed == 4);
  REQUIRE(rep.diagnostics.size() == 4);
  CHECK(rep.diagnostics[0].find("line 3") != std::string::npos);
  CHECK(rep.diagnostics[1].find("non-monotonic") != std::string::npos);
  // Kept frames 0, 5, 6: the window over (0, 5) straddles a gap, (5, 6) is whole.
  CHECK(samples.size() == 1);
  CHECK(rep.windows_discarded_gap == 1);
  std::filesystem::remove(path);
}

TEST_CASE("ingest_csv: missing column is fatal") {
  const std::string path = write_temp_csv("mstf_nocol.csv", "track_id,frame,x\n1,0,0.0\n");
  CHECK_THROWS_WITH_AS(ingest_csv(path, 1, 1, 1), doctest::Contains("'y'"), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("normalized: origin is the last observed step") {
  Sample s;
  s.history = {{1, 1}, {2, 2}, {5, 7}};
  s.future = {{6, 8}, {7, 9}};
  s.mask.values = {1, 1, 1};
  Sample n = normalized(s);
  CHECK(n.history[2] == Pt{0, 0});
  CHECK(n.norm.origin == Pt{5, 7});
  CHECK(n.future[0] == Pt{1, 1});

  // Masked final point: origin falls back to the last observed index.
  s.mask.values = {1, 1, 0};
  Sample n2 = normalized(s);
  CHECK(n2.norm.origin == Pt{2, 2});
  CHECK(n2.history[1] == Pt{0, 0});
}

TEST_CASE("normalized/denormalize round trip") {
  Rng rng(5);
  ManeuverSpec spec;
  spec.kind = ManeuverKind::left_change;
  spec.noise_sigma = 0.05;
  std::vector<Sample> samples = gen_synthetic(spec, 10, 8, 6, 10.0, rng);
  for (const Sample& s : samples) {
    Sample n = normalized(s);
    std::vector<Pt> back = denormalize(n.future, n.norm);
    for (size_t i = 0; i < back.size(); ++i) {
      CHECK(std::abs(back[i].x - s.future[i].x) < 1e-9);
      CHECK(std::abs(back[i].y - s.future[i].y) < 1e-9);
    }
  }
}

TEST_CASE("prepare_input: masked steps zero, observed steps normalized") {
  Sample s;
  s.history = {{1, 1}, {2, 2}, {3, 3}, {4, 4}};
  s.future = {{5, 5}, {6, 6}};
  s.mask.values = {1, 1, 1, 1};
  SequenceMask m{{1, 0, 1, 0}};
  ModelInput in = prepare_input(s, m);
  // Origin = last observed = history[2] = (3,3).
  CHECK(in.frame.origin == Pt{3, 3});
  CHECK(in.x_miss.at(0, 0) == -2.0);
  CHECK(in.x_miss.at(1, 0) == 0.0);  // masked
  CHECK(in.x_miss.at(2, 0) == 0.0);  // origin itself
  CHECK(in.x_miss.at(3, 0) == 0.0);  // masked
  CHECK(in.future.at(0, 0) == 2.0);
  CHECK(in.future.at(1, 1) == 3.0);
}

TEST_CASE("translation invariance: shifting inputs leaves normalized tensors bit-identical") {
  // Dyadic coordinates and a dyadic shift keep every subtraction exact.
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    Sample s;
    const int t_h = 6, t_f = 4;
    for (int i = 0; i < t_h; ++i) {
      s.history.push_back(Pt{rng.uniform_int(-4096, 4096) / 64.0,
                             rng.uniform_int(-4096, 4096) / 64.0});
    }
    for (int i = 0; i < t_f; ++i) {
      s.future.push_back(Pt{rng.uniform_int(-4096, 4096) / 64.0,
                            rng.uniform_int(-4096, 4096) / 64.0});
    }
    s.mask.values.assign(t_h, 1);
    SequenceMask m{{1, 0, 1, 1, 0, 1}};

    const Pt shift{rng.uniform_int(-1000, 1000) / 8.0, rng.uniform_int(-1000, 1000) / 8.0};
    Sample moved = s;
    for (Pt& p : moved.history) p = p + shift;
    for (Pt& p : moved.future) p = p + shift;

    ModelInput a = prepare_input(s, m);
    ModelInput b = prepare_input(moved, m);
    for (int64_t i = 0; i < a.x_miss.size(); ++i) CHECK(a.x_miss[i] == b.x_miss[i]);
    for (int64_t i = 0; i < a.future.size(); ++i) CHECK(a.future[i] == b.future[i]);
  }
}

TEST_CASE("split_by_track: disjoint, deterministic, roughly 70/10/20") {
  Rng rng(11);
  ManeuverSpec spec;
  std::vector<Sample> samples = gen_synthetic(spec, 100, 4, 4, 10.0, rng);
  SplitIndices a = split_by_track(samples, Rng(33));
  SplitIndices b = split_by_track(samples, Rng(33));
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
  CHECK(a.train.size() == 70);
  CHECK(a.val.size() == 10);
  CHECK(a.test.size() == 20);

  std::set<int64_t> train_ids, other_ids;
  for (int i : a.train) train_ids.insert(samples[static_cast<size_t>(i)].track_id);
  for (int i : a.val) other_ids.insert(samples[static_cast<size_t>(i)].track_id);
  for (int i : a.test) other_ids.insert(samples[static_cast<size_t>(i)].track_id);
  for (int64_t id : train_ids) CHECK(other_ids.count(id) == 0);

  SplitIndices c = split_by_track(samples, Rng(34));
  CHECK(c.train != a.train);
}
