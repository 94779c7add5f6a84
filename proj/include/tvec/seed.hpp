#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tvec {

// Every stochastic component draws from its own stream:
//   subseed = splitmix64(master ^ fnv1a64(component_name))
// so reusing a master seed never reuses a stream across components.
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::string_view component);

// Uniform double in [0, 1) from the top 53 bits. Used instead of
// std::uniform_real_distribution so draws match across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace tvec
