#include "toftomo/rng.hpp"

#include <algorithm>
#include <cmath>

namespace toftomo::rng {

std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t p : parts) h = mix(h ^ mix(p));
    return h;
}

double uniform(std::uint64_t k, std::uint64_t counter) {
    std::uint64_t bits = mix(k ^ mix(counter + 0x2545f4914f6cdd1dULL));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double normal(std::uint64_t k, std::uint64_t counter) {
    double u1 = uniform(k, 2 * counter);
    double u2 = uniform(k, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

double exponential(std::uint64_t k, std::uint64_t counter, double mean) {
    return -mean * std::log(uniform(k, counter));
}

double poisson(std::uint64_t k, std::uint64_t counter, double mean) {
    if (!(mean > 0.0)) return 0.0;
    if (mean > 30.0) return std::max(0.0, std::round(mean + std::sqrt(mean) * normal(k, counter)));
    double u = uniform(k, counter);
    double p = std::exp(-mean);
    double cdf = p;
    int n = 0;
    while (u > cdf && n < 1000) {
        ++n;
        p *= mean / n;
        cdf += p;
    }
    return n;
}

}  // namespace toftomo::rng
