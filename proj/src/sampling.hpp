#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace anisonet {

/// The first n primes.
std::vector<int> first_primes(int n);

/// Radical inverse of `index` in `base`. With a seed, digit d at position j
/// is replaced by perm_j(d), where perm_j is a seed-keyed permutation of the
/// digits that keeps 0 fixed.
double radical_inverse(std::uint64_t index, int base, std::optional<std::uint64_t> scramble_seed = std::nullopt);

/// Points i = 1..n of the Halton sequence in the first `dims` prime bases,
/// one row per point.
std::vector<std::vector<double>> halton_sample(int n, int dims,
                                               std::optional<std::uint64_t> scramble_seed = std::nullopt);

} // namespace anisonet
