#include <random>
#include <set>

#include "doctest.h"
#include "handseg/error.hpp"
#include "handseg/slic.hpp"
#include "../support/oracles.hpp"

using namespace handseg;

namespace {

Frame random_blocks(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> U(0, 255), J(-10, 10);
  std::vector<Rgb> palette;
  for (int i = 0; i < 6; ++i)
    palette.push_back({static_cast<std::uint8_t>(U(rng)), static_cast<std::uint8_t>(U(rng)),
                       static_cast<std::uint8_t>(U(rng))});
  Frame f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Rgb c = palette[((x / 7) + 3 * (y / 5)) % palette.size()];
      auto j = [&](int v) { return static_cast<std::uint8_t>(std::clamp(v + J(rng), 0, 255)); };
      f.set(x, y, {j(c.r), j(c.g), j(c.b)});
    }
  return f;
}

void check_partition(const SuperpixelSet& s) {
  const std::size_t n = static_cast<std::size_t>(s.width) * s.height;
  REQUIRE(s.labels.size() == n);
  std::size_t total = 0;
  std::vector<int> seen(n, 0);
  for (std::size_t k = 0; k < s.superpixels.size(); ++k) {
    const Superpixel& sp = s.superpixels[k];
    CHECK(sp.id == static_cast<std::int32_t>(k));
    REQUIRE_FALSE(sp.pixels.empty());
    total += sp.pixels.size();
    double cx = 0, cy = 0;
    for (std::int32_t i : sp.pixels) {
      ++seen[i];
      CHECK(s.labels[i] == sp.id);
      cx += i % s.width;
      cy += i / s.width;
    }
    CHECK(sp.cx == doctest::Approx(cx / sp.pixels.size()));
    CHECK(sp.cy == doctest::Approx(cy / sp.pixels.size()));
  }
  CHECK(total == n);
  for (int v : seen) CHECK(v == 1);
}

// Every superpixel is one 4-connected piece.
void check_connected(const SuperpixelSet& s) {
  for (const Superpixel& sp : s.superpixels) {
    std::set<std::int32_t> members(sp.pixels.begin(), sp.pixels.end()), seen;
    std::vector<std::int32_t> stack{sp.pixels.front()};
    seen.insert(sp.pixels.front());
    while (!stack.empty()) {
      const std::int32_t i = stack.back();
      stack.pop_back();
      const int x = i % s.width, y = i / s.width;
      const int nb[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[1] < 0 || q[0] >= s.width || q[1] >= s.height) continue;
        const std::int32_t j = q[1] * s.width + q[0];
        if (members.count(j) && seen.insert(j).second) stack.push_back(j);
      }
    }
    CHECK(seen.size() == members.size());
  }
}

Superpixel make_sp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-50, 50), P(0, 500);
  Superpixel s;
  s.mean_color = {U(rng) + 50, U(rng), U(rng)};
  s.cx = P(rng);
  s.cy = P(rng);
  return s;
}

}  // namespace

TEST_CASE("partition and connectivity on random frames") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Frame f = random_blocks(60 + 7 * static_cast<int>(seed), 45, seed);
    SlicParams p;
    p.target_count = 20 + 10 * static_cast<int>(seed);
    p.m = 10.0 * seed;
    const SuperpixelSet s = compute_superpixels(f, p);
    check_partition(s);
    check_connected(s);
  }
}

TEST_CASE("uniform frame splits into near-equal rectangles") {
  Frame f(40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) f.set(x, y, {120, 130, 140});
  SlicParams p;
  p.target_count = 4;
  const SuperpixelSet s = compute_superpixels(f, p);
  check_partition(s);
  REQUIRE(s.superpixels.size() == 4);
  for (const Superpixel& sp : s.superpixels) {
    CHECK(sp.pixels.size() >= 350);
    CHECK(sp.pixels.size() <= 450);
  }
}

TEST_CASE("two colour halves split on the edge") {
  Frame f(40, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 40; ++x) f.set(x, y, x < 20 ? Rgb{200, 40, 40} : Rgb{40, 60, 200});
  SlicParams p;
  p.target_count = 2;
  p.m = 10;
  const SuperpixelSet s = compute_superpixels(f, p);
  check_partition(s);
  REQUIRE(s.superpixels.size() == 2);
  std::size_t correct = 0;
  const std::int32_t left_id = s.labels[0];
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 40; ++x) correct += (s.labels[y * 40 + x] == left_id) == (x < 20);
  CHECK(correct >= 0.95 * 800);
}

TEST_CASE("raw clustering equals the pixel-centric Lloyd oracle") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Frame f = random_blocks(20, 20, seed);
    const LabImage lab = to_lab(f);
    for (int iters : {0, 1, 3, 10}) {
      SlicParams p;
      p.target_count = 4 + static_cast<int>(seed % 5);
      p.m = 5.0 + 7.0 * seed;
      p.iterations = iters;
      double step = 0;
      const auto seeds = slic_seeds(lab, p.target_count, &step);
      const SlicClustering got = slic_cluster(lab, p);
      CHECK(got.step == step);
      CHECK(got.labels == oracle::slic_lloyd(lab, seeds, step, p.m, iters));
    }
  }
}

TEST_CASE("seeds sit on a grid at local gradient minima") {
  Frame f(30, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x) f.set(x, y, {90, 90, 90});
  const LabImage lab = to_lab(f);
  double s = 0;
  const auto seeds = slic_seeds(lab, 9, &s);
  CHECK(s == doctest::Approx(10.0));
  REQUIRE(seeds.size() == 9);
  CHECK(seeds[0].x == 5.0);
  CHECK(seeds[0].y == 5.0);
  CHECK(seeds[8].x == 25.0);
  CHECK_THROWS_AS(slic_seeds(lab, 901, &s), ParamError);
}

TEST_CASE("superpixel parameter errors") {
  Frame f(4, 4);
  SlicParams p;
  p.target_count = 17;
  CHECK_THROWS_AS(compute_superpixels(f, p), ParamError);
  p.target_count = 2;
  p.m = 0;
  CHECK_THROWS_AS(compute_superpixels(f, p), ParamError);
}

TEST_CASE("distance arithmetic") {
  Superpixel a, b;
  a.mean_color = b.mean_color = {50, 10, -10};
  CHECK(superpixel_distance(a, a, 7.0) == 0.0);
  b.cx = 3;
  b.cy = 4;
  CHECK(superpixel_distance(a, b, 2.0) == 100.0);
  Superpixel c = a;
  c.mean_color = {53, 14, -10};
  CHECK(superpixel_distance(a, c, 9.0) == 25.0);
}

TEST_CASE("distance symmetry and monotonicity in m") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> M(0.1, 100);
  for (int i = 0; i < 1000; ++i) {
    const Superpixel a = make_sp(rng), b = make_sp(rng);
    const double m = M(rng);
    CHECK(superpixel_distance(a, b, m) == superpixel_distance(b, a, m));
    CHECK(superpixel_distance(a, b, m) >= 0.0);
    CHECK(superpixel_distance(a, b, m * 1.01) > superpixel_distance(a, b, m));
  }
}
