#include <random>
#include <sstream>

#include "doctest.h"
#include "handseg/error.hpp"
#include "handseg/eval.hpp"
#include "handseg/pool.hpp"

using namespace handseg;

namespace {

Frame uniform(int w, int h, Rgb c) {
  Frame f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f.set(x, y, c);
  return f;
}

// Skin square on a background, with mild deterministic noise.
TrainingPair square_pair(Rgb skin, Rgb bg, std::uint64_t seed, const std::string& id) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> U(-6, 6);
  const int w = 40, h = 30;
  Frame f(w, h);
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool in = x >= 10 && x < 28 && y >= 8 && y < 24;
      const Rgb c = in ? skin : bg;
      auto j = [&](int v) { return static_cast<std::uint8_t>(std::clamp(v + U(rng), 0, 255)); };
      f.set(x, y, {j(c.r), j(c.g), j(c.b)});
      m.at(x, y) = in;
    }
  return {f, m, id};
}

ForestParams small_forest() {
  ForestParams p;
  p.n_trees = 3;
  p.max_depth = 6;
  return p;
}

GlobalFeature random_feature(std::mt19937_64& rng, const BinConfig& cfg) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  GlobalFeature g;
  g.config = cfg;
  g.bins.resize(cfg.total());
  double s = 0;
  for (double& v : g.bins) s += (v = U(rng));
  for (double& v : g.bins) v /= s;
  return g;
}

ModelPool random_pool(std::mt19937_64& rng, std::size_t n) {
  const auto pair = square_pair({220, 150, 120}, {40, 80, 140}, 1, "x");
  std::vector<PixelSample> s = sample_pixels(pair.frame, pair.mask, 0, 0);
  const Forest f = train_forest(s, small_forest());
  std::vector<IlluminationModel> models;
  for (std::size_t i = 0; i < n; ++i)
    models.push_back({f, random_feature(rng, {4, 2, 2}), "m" + std::to_string(i)});
  return ModelPool(models);
}

std::vector<std::size_t> brute_force_knn(const ModelPool& pool, const GlobalFeature& q,
                                         std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    double s = 0;
    for (std::size_t b = 0; b < q.bins.size(); ++b) {
      const double e = q.bins[b] - pool.model(i).global_feature.bins[b];
      s += e * e;
    }
    d.push_back({std::sqrt(s), i});
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(d[i].second);
  return out;
}

}  // namespace

TEST_CASE("pool has one model per usable pair") {
  std::vector<TrainingPair> pairs;
  for (int i = 0; i < 20; ++i)
    pairs.push_back(square_pair({static_cast<std::uint8_t>(180 + i), 140, 110},
                                {40, 80, static_cast<std::uint8_t>(100 + 5 * i)}, i,
                                "p" + std::to_string(i)));
  PoolParams pp;
  pp.forest = small_forest();
  const ModelPool pool = build_pool(pairs, pp);
  CHECK(pool.size() == 20);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(pool.model(i).source_id == pairs[i].source_id);
    const GlobalFeature gf = hsv_histogram(pairs[i].frame, pp.bins);
    CHECK(pool.model(i).global_feature.bins == gf.bins);
  }
}

TEST_CASE("singleton pool always recommends model 0") {
  PoolParams pp;
  pp.forest = small_forest();
  const ModelPool pool =
      build_pool({square_pair({220, 150, 120}, {40, 80, 140}, 1, "only")}, pp);
  CHECK(pool.size() == 1);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i)
    CHECK(pool.recommend(random_feature(rng, pp.bins), 1) == std::vector<std::size_t>{0});
}

TEST_CASE("single-class masks are skipped") {
  auto good = square_pair({220, 150, 120}, {40, 80, 140}, 1, "good");
  auto bad = good;
  bad.source_id = "bad";
  std::fill(bad.mask.storage().begin(), bad.mask.storage().end(), 0);
  PoolParams pp;
  pp.forest = small_forest();
  BuildReport report;
  const ModelPool pool = build_pool({bad, good}, pp, &report);
  CHECK(pool.size() == 1);
  CHECK(pool.model(0).source_id == "good");
  CHECK(report.skipped == std::vector<std::string>{"bad"});
  CHECK_THROWS_AS(build_pool({bad}, pp), DataError);
  auto wrong = good;
  wrong.mask = BinaryMask(3, 3);
  CHECK_THROWS_AS(build_pool({wrong}, pp), DataError);
}

TEST_CASE("uniform-colour pools match pairwise distance oracle") {
  const Rgb cols[3] = {{255, 0, 0}, {0, 200, 0}, {30, 30, 250}};
  std::vector<IlluminationModel> models;
  const auto pair = square_pair({220, 150, 120}, {40, 80, 140}, 1, "x");
  const Forest f = train_forest(sample_pixels(pair.frame, pair.mask, 0, 0), small_forest());
  for (int i = 0; i < 3; ++i)
    models.push_back({f, hsv_histogram(uniform(8, 8, cols[i])), std::to_string(i)});
  const ModelPool pool(models);
  for (int i = 0; i < 3; ++i) {
    const GlobalFeature q = hsv_histogram(uniform(8, 8, cols[i]));
    const auto r = pool.recommend(q, 3);
    CHECK(r.front() == static_cast<std::size_t>(i));
    CHECK(r == brute_force_knn(pool, q, 3));
    // Distinct one-hot histograms sit sqrt(2) apart.
    for (int j = 0; j < 3; ++j)
      CHECK(feature_distance(q, pool.model(j).global_feature) ==
            doctest::Approx(i == j ? 0.0 : std::sqrt(2.0)));
  }
}

TEST_CASE("recommend matches brute force on random queries") {
  std::mt19937_64 rng(2);
  const ModelPool pool = random_pool(rng, 25);
  for (int q = 0; q < 1000; ++q) {
    const GlobalFeature g = random_feature(rng, {4, 2, 2});
    CHECK(pool.recommend(g, 5) == brute_force_knn(pool, g, 5));
  }
  const GlobalFeature seven = pool.model(7).global_feature;
  CHECK(pool.recommend(seven, 1).front() == 7);
  auto all = pool.recommend(seven, pool.size());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
}

TEST_CASE("recommend ties go to the lower index") {
  std::mt19937_64 rng(3);
  ModelPool base = random_pool(rng, 4);
  auto models = base.models();
  models[3].global_feature = models[1].global_feature;
  const ModelPool pool(models);
  const auto r = pool.recommend(models[1].global_feature, 2);
  CHECK(r == std::vector<std::size_t>{1, 3});
}

TEST_CASE("recommend errors") {
  std::mt19937_64 rng(4);
  const ModelPool pool = random_pool(rng, 3);
  CHECK_THROWS_WITH_AS(pool.recommend(pool.model(0).global_feature, 4), "k exceeds pool size",
                       ParamError);
  CHECK_THROWS_AS(pool.recommend(pool.model(0).global_feature, 0), ParamError);
}

TEST_CASE("fusion weights and arithmetic") {
  const auto w = fusion_weights(0.9, 3);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == 0.9);
  CHECK(w[1] == doctest::Approx(0.81).epsilon(1e-15));
  CHECK(w[2] == doctest::Approx(0.729).epsilon(1e-15));
  CHECK(w[0] + w[1] + w[2] == doctest::Approx(2.439).epsilon(1e-15));

  ProbabilityMap one(2, 2, 1.0), zero(2, 2, 0.0);
  const std::vector<ProbabilityMap> two{one, zero};
  const ProbabilityMap f = fuse(two, 0.9);
  for (double v : f.values()) CHECK(v == doctest::Approx(0.9 / (0.9 + 0.81)).epsilon(1e-12));
}

TEST_CASE("fusion of identical maps is idempotent and stays in the hull") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  ProbabilityMap m(13, 7);
  for (double& v : m.storage()) v = U(rng);
  const std::vector<ProbabilityMap> same(4, m);
  const ProbabilityMap f = fuse(same, 0.9);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(f[i] == doctest::Approx(m[i]).epsilon(1e-14));

  std::vector<ProbabilityMap> maps;
  for (int k = 0; k < 5; ++k) {
    ProbabilityMap r(13, 7);
    for (double& v : r.storage()) v = U(rng);
    maps.push_back(r);
  }
  const ProbabilityMap g = fuse(maps, 0.7);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double lo = 1, hi = 0;
    for (const auto& r : maps) {
      lo = std::min(lo, r[i]);
      hi = std::max(hi, r[i]);
    }
    CHECK(g[i] >= lo - 1e-15);
    CHECK(g[i] <= hi + 1e-15);
  }
}

TEST_CASE("fusion errors") {
  CHECK_THROWS_AS(fuse({}, 0.9), ParamError);
  const std::vector<ProbabilityMap> bad{ProbabilityMap(2, 2), ProbabilityMap(3, 2)};
  CHECK_THROWS_AS(fuse(bad, 0.9), DataError);
  const std::vector<ProbabilityMap> ok{ProbabilityMap(2, 2)};
  CHECK_THROWS_AS(fuse(ok, 1.0), ParamError);
  CHECK_THROWS_AS(fuse(ok, 0.0), ParamError);
}

TEST_CASE("binarize is strict") {
  ProbabilityMap m(3, 1, std::vector<double>{0.49, 0.5, 0.51});
  const BinaryMask b = binarize(m, 0.5);
  CHECK(b[0] == 0);
  CHECK(b[1] == 0);
  CHECK(b[2] == 1);
}

TEST_CASE("segmenting a training frame reproduces its mask") {
  const auto pair = square_pair({220, 150, 120}, {40, 80, 140}, 1, "self");
  PoolParams pp;
  pp.forest = small_forest();
  const ModelPool pool = build_pool({pair}, pp);
  const BinaryMask seg = segment(pool, pair.frame, SegmentParams{1, 0.9, 0.5});
  CHECK(binary_f1(seg, pair.mask) >= 0.95);
  const BinaryMask none = segment(pool, uniform(40, 30, {40, 80, 140}), SegmentParams{1, 0.9, 0.5});
  CHECK(count_nonzero(none) == 0);
}

TEST_CASE("segment equals manual composition") {
  std::vector<TrainingPair> pairs;
  for (int i = 0; i < 6; ++i)
    pairs.push_back(square_pair({static_cast<std::uint8_t>(170 + 10 * i), 140, 110},
                                {40, static_cast<std::uint8_t>(60 + 20 * i), 140}, i,
                                std::to_string(i)));
  PoolParams pp;
  pp.forest = small_forest();
  const ModelPool pool = build_pool(pairs, pp);
  const Frame& f = pairs[2].frame;
  const auto picks = pool.recommend(hsv_histogram(f, pool.bins()), 5);
  std::vector<ProbabilityMap> maps;
  for (auto i : picks) maps.push_back(predict_map(pool.model(i).forest, f));
  CHECK(segment(pool, f, SegmentParams{}) == binarize(fuse(maps, 0.9), 0.5));
  // k above the pool size falls back to the whole pool.
  CHECK(segment(pool, f, SegmentParams{50, 0.9, 0.5}) == segment(pool, f, SegmentParams{6, 0.9, 0.5}));
}

TEST_CASE("sample_pixels is class balanced and deterministic") {
  const auto pair = square_pair({220, 150, 120}, {40, 80, 140}, 1, "s");
  const auto s = sample_pixels(pair.frame, pair.mask, 50, 9);
  CHECK(s.size() == 100);
  CHECK(std::count_if(s.begin(), s.end(), [](auto& p) { return p.skin; }) == 50);
  const auto t = sample_pixels(pair.frame, pair.mask, 50, 9);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].skin == t[i].skin);
    CHECK(s[i].feature.l == t[i].feature.l);
  }
  CHECK(sample_pixels(pair.frame, pair.mask, 0, 0).size() == pair.frame.pixel_count());
}

TEST_CASE("pool container round trip and version check") {
  std::vector<TrainingPair> pairs;
  for (int i = 0; i < 3; ++i)
    pairs.push_back(square_pair({static_cast<std::uint8_t>(190 + 10 * i), 140, 110},
                                {40, 80, 140}, i, "pair-" + std::to_string(i)));
  PoolParams pp;
  pp.forest = small_forest();
  pp.bins = {6, 4, 4};
  const ModelPool pool = build_pool(pairs, pp);
  std::stringstream ss;
  save_pool(pool, ss);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 6) == "HSPOOL");
  std::istringstream in(bytes);
  const ModelPool back = load_pool(in);
  REQUIRE(back.size() == pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(back.model(i).forest == pool.model(i).forest);
    CHECK(back.model(i).global_feature.bins == pool.model(i).global_feature.bins);
    CHECK(back.model(i).global_feature.config == pp.bins);
    CHECK(back.model(i).source_id == pool.model(i).source_id);
  }

  std::string v2 = bytes;
  v2[8] = 2;
  std::istringstream bad_version(v2);
  CHECK_THROWS_AS(load_pool(bad_version), DataError);
  std::string magic = bytes;
  magic[0] = 'X';
  std::istringstream bad_magic(magic);
  CHECK_THROWS_AS(load_pool(bad_magic), DataError);
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_pool(truncated), DataError);
}
