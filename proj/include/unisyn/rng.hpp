#pragma once

#include <random>

namespace unisyn {

using Rng = std::mt19937_64;

}  // namespace unisyn
