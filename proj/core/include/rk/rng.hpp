#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rk {

/// Derives an independent sub-seed from a master seed and a stream label,
/// so that e.g. the domain sketch, the range sketch and the noise vector
/// drawn from the same master seed are decorrelated.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

/// Seeded generator for the given stream label.
std::mt19937_64 seeded_stream(std::uint64_t master, std::string_view label);

} // namespace rk
