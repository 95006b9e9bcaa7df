#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace neurocap {

/// Engine used for every random draw in the library.
using Rng = std::mt19937_64;

/// Derives an independent engine for the named sub-stream of `seed`.
///
/// Streams are keyed by name ("init", "shuffle", "split", ...) and an
/// optional index, so consuming draws in one stage never shifts another.
Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

}  // namespace neurocap
