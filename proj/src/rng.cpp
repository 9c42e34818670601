#include "cnmf/rng.hpp"

#include <cmath>
#include <numbers>

namespace cnmf {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

void check_dims(Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw ArgumentError("random matrix dimensions must be >= 1");
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& s : state_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(theta);
  has_spare_ = true;
  return radius * std::cos(theta);
}

Rng Rng::child(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ 0x6a09e667f3bcc909ULL;
  std::uint64_t a = splitmix64(x);
  std::uint64_t y = stream + 0xbb67ae8584caa73bULL;
  std::uint64_t b = splitmix64(y);
  std::uint64_t z = a ^ rotl(b, 23);
  return splitmix64(z);
}

DenseMatrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  check_dims(rows, cols);
  DenseMatrix out(rows, cols);
  double* p = out.data();
  for (Index i = 0, n = out.size(); i < n; ++i) p[i] = rng.normal();
  return out;
}

DenseMatrix uniform_matrix(Index rows, Index cols, Rng& rng) {
  check_dims(rows, cols);
  DenseMatrix out(rows, cols);
  double* p = out.data();
  for (Index i = 0, n = out.size(); i < n; ++i) p[i] = rng.uniform();
  return out;
}

}  // namespace cnmf
