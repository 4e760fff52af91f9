#pragma once

#include <cstdint>
#include <random>

#include "dane/tensor.hpp"

namespace dane {

using Rng = std::mt19937_64;

// Independent child seed for stream `index` of a master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// U(-a, a) with a = sqrt(6 / (rows + cols)).
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace dane
