#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fash {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

// Stream seed for a named unit, independent of scheduling order.
std::uint64_t derive_seed(std::uint64_t master, std::string_view key);

// Stream seed for an indexed replicate (e.g. rho index, replicate index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

}  // namespace fash
