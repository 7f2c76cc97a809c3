#include <cstring>
#include <random>

#include "doctest.h"
#include "handseg/kernels.hpp"

using namespace handseg::kernels;

namespace {

std::vector<const KernelTable*> variants() {
  std::vector<const KernelTable*> v;
  if (avx2_kernels()) v.push_back(avx2_kernels());
  if (neon_kernels()) v.push_back(neon_kernels());
  return v;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = U(rng);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_CASE("active table is one of the compiled variants") {
  const KernelTable& t = active_kernels();
  const bool known = &t == &scalar_kernels() || &t == avx2_kernels() || &t == neon_kernels();
  CHECK(known);
  MESSAGE("active kernels: " << std::string(t.name));
}

TEST_CASE("SIMD kernels are bit-identical to scalar") {
  std::mt19937_64 rng(1);
  const KernelTable& ref = scalar_kernels();
  for (const KernelTable* k : variants()) {
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 31u, 64u, 1001u}) {
      const auto src = random_vec(rng, n, 0.0, 1.0);
      auto acc = random_vec(rng, n, 0.0, 3.0), acc2 = acc;
      ref.weighted_accumulate(acc.data(), src.data(), 0.729, n);
      k->weighted_accumulate(acc2.data(), src.data(), 0.729, n);
      CHECK(same_bits(acc, acc2));

      auto v = acc, v2 = acc;
      ref.divide(v.data(), 2.439, n);
      k->divide(v2.data(), 2.439, n);
      CHECK(same_bits(v, v2));

      auto t = random_vec(rng, n, 0.0, 1.0);
      if (n > 2) t[1] = 0.5;
      std::vector<std::uint8_t> o1(n, 7), o2(n, 9);
      ref.threshold(t.data(), 0.5, o1.data(), n);
      k->threshold(t.data(), 0.5, o2.data(), n);
      CHECK(o1 == o2);

      const auto l = random_vec(rng, n, 0, 100), a = random_vec(rng, n, -80, 80),
                 b = random_vec(rng, n, -80, 80);
      auto best = random_vec(rng, n, 0, 5000), best2 = best;
      std::vector<std::int32_t> lab(n, -1), lab2(n, -1);
      SlicRun run;
      run.l = l.data();
      run.a = a.data();
      run.b = b.data();
      run.n = n;
      run.x0 = 13;
      run.y = 7;
      run.cl = 50;
      run.ca = 3;
      run.cb = -4;
      run.cx = 20.5;
      run.cy = 9.25;
      run.spatial_scale = 6.25;
      run.id = 42;
      run.best = best.data();
      run.label = lab.data();
      ref.slic_assign(run);
      run.best = best2.data();
      run.label = lab2.data();
      k->slic_assign(run);
      CHECK(same_bits(best, best2));
      CHECK(lab == lab2);
    }
  }
}

TEST_CASE("scalar reference semantics") {
  const KernelTable& k = scalar_kernels();
  std::vector<double> acc{1, 2}, src{3, 4};
  k.weighted_accumulate(acc.data(), src.data(), 0.5, 2);
  CHECK(acc == std::vector<double>{2.5, 4});
  k.divide(acc.data(), 2.0, 2);
  CHECK(acc == std::vector<double>{1.25, 2});
  std::vector<std::uint8_t> out(2);
  k.threshold(acc.data(), 1.25, out.data(), 2);
  CHECK(out == std::vector<std::uint8_t>{0, 1});
}
