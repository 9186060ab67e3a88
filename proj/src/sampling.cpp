#include "sampling.hpp"

#include "error.hpp"

#include <map>
#include <numeric>
#include <random>
#include <tuple>
#include <utility>

namespace anisonet {

std::vector<int> first_primes(int n) {
  std::vector<int> p;
  for (int c = 2; int(p.size()) < n; ++c) {
    bool prime = true;
    for (int q : p) {
      if (q * q > c) break;
      if (c % q == 0) {
        prime = false;
        break;
      }
    }
    if (prime) p.push_back(c);
  }
  return p;
}

namespace {

// SplitMix64 finalizer, used to derive one generator seed per (base, digit).
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

const std::vector<int>& digit_permutation(std::uint64_t seed, int base, int position) {
  static thread_local std::map<std::tuple<std::uint64_t, int, int>, std::vector<int>> cache;
  auto key = std::make_tuple(seed, base, position);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<int> perm(base);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(mix(seed ^ mix(std::uint64_t(base) << 32 | std::uint32_t(position))));
  // Fisher-Yates over digits 1..base-1.
  for (int i = base - 1; i > 1; --i) {
    std::uniform_int_distribution<int> pick(1, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  return cache.emplace(key, std::move(perm)).first->second;
}

} // namespace

double radical_inverse(std::uint64_t index, int base, std::optional<std::uint64_t> scramble_seed) {
  if (base < 2) throw InvalidArgument("radical inverse base must be at least 2");
  double inv = 1.0 / base, f = inv, r = 0.0;
  for (int pos = 0; index > 0; ++pos, index /= std::uint64_t(base), f *= inv) {
    int d = int(index % std::uint64_t(base));
    if (scramble_seed) d = digit_permutation(*scramble_seed, base, pos)[d];
    r += d * f;
  }
  return r;
}

std::vector<std::vector<double>> halton_sample(int n, int dims, std::optional<std::uint64_t> scramble_seed) {
  if (n < 1 || dims < 1) throw InvalidArgument("Halton sample needs n >= 1 and dims >= 1");
  const std::vector<int> bases = first_primes(dims);
  std::vector<std::vector<double>> pts(n, std::vector<double>(dims));
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dims; ++d) pts[i][d] = radical_inverse(std::uint64_t(i) + 1, bases[d], scramble_seed);
  return pts;
}

} // namespace anisonet
