#include <doctest.h>

#include <cmath>
#include <set>

#include "cnmf/rng.hpp"

using namespace cnmf;

namespace {

// Reference xoshiro256** and splitmix64, transcribed from the published C code.
struct RefRng {
  std::uint64_t s[4];
  explicit RefRng(std::uint64_t seed) {
    for (auto& v : s) {
      std::uint64_t z = (seed += 0x9e3779b97f4a7c15ULL);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      v = z ^ (z >> 31);
    }
  }
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

}  // namespace

TEST_CASE("bit stream matches the reference generator") {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xdeadbeefULL}) {
    Rng rng(seed);
    RefRng ref(seed);
    for (int i = 0; i < 1000; ++i) REQUIRE(rng.next_u64() == ref.next());
  }
}

TEST_CASE("splitmix64 seeding matches the published first output for seed 0") {
  // First splitmix64 output for state 0 is 0xe220a8397b1dcdaf.
  RefRng ref(0);
  CHECK(ref.s[0] == 0xe220a8397b1dcdafULL);
}

TEST_CASE("same seed gives the same stream, different seeds differ") {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);
}

TEST_CASE("uniform draws use the top 53 bits and stay in [0, 1)") {
  Rng rng(3);
  RefRng ref(3);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u == static_cast<double>(ref.next() >> 11) * 0x1.0p-53);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // Mean within 5 standard errors of 1/2.
  CHECK(std::abs(sum / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("normal draws: Box-Muller pair, cosine first") {
  Rng rng(11);
  RefRng ref(11);
  const double u1 = 1.0 - static_cast<double>(ref.next() >> 11) * 0x1.0p-53;
  const double u2 = static_cast<double>(ref.next() >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  CHECK(rng.normal() == doctest::Approx(radius * std::cos(theta)).epsilon(1e-15));
  CHECK(rng.normal() == doctest::Approx(radius * std::sin(theta)).epsilon(1e-15));
}

TEST_CASE("normal moments") {
  Rng rng(5);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
  }
  CHECK(std::abs(s1 / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("matrices fill in row-major order from the stream") {
  Rng a(9), b(9);
  const DenseMatrix g = gaussian_matrix(4, 3, a);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) CHECK(g(i, j) == b.normal());
  Rng c(9), d(9);
  const DenseMatrix u = uniform_matrix(3, 5, c);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 5; ++j) CHECK(u(i, j) == d.uniform());
}

TEST_CASE("a block-by-block draw equals one whole draw") {
  Rng whole(21), parts(21);
  const DenseMatrix all = gaussian_matrix(10, 4, whole);
  const DenseMatrix top = gaussian_matrix(3, 4, parts);
  const DenseMatrix bottom = gaussian_matrix(7, 4, parts);
  CHECK(all.topRows(3) == top);
  CHECK(all.bottomRows(7) == bottom);
}

TEST_CASE("child streams depend on the seed only") {
  Rng a(100);
  a.next_u64();
  Rng fresh(100);
  Rng c1 = a.child(4), c2 = fresh.child(4);
  for (int i = 0; i < 10; ++i) CHECK(c1.next_u64() == c2.next_u64());
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 1000; ++s) seeds.insert(derive_seed(100, s));
  CHECK(seeds.size() == 1000);
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}

TEST_CASE("empty random matrices are rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(gaussian_matrix(0, 3, rng), ArgumentError);
  CHECK_THROWS_AS(uniform_matrix(3, 0, rng), ArgumentError);
}
