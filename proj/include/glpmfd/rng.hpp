#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace glpmfd {

using Rng = std::mt19937_64;

// All randomness in a run descends from one seed through named substreams
// ("simulate", "train", "eval", ...) plus an optional integer index
// (trial, graph, frame).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

}  // namespace glpmfd
