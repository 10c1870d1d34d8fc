#pragma once

#include <cstdint>
#include <initializer_list>

namespace toftomo::rng {

// Counter-based draws: every value is a pure function of (key, counter), so results never
// depend on evaluation order or thread count.
std::uint64_t mix(std::uint64_t x);
std::uint64_t key(std::initializer_list<std::uint64_t> parts);

// Uniform on the open interval (0, 1).
double uniform(std::uint64_t key, std::uint64_t counter);
double normal(std::uint64_t key, std::uint64_t counter);
double exponential(std::uint64_t key, std::uint64_t counter, double mean);
// Exact inversion below mean 30, rounded normal approximation above.
double poisson(std::uint64_t key, std::uint64_t counter, double mean);

}  // namespace toftomo::rng
