#pragma once

#include <random>

#include "toftomo/constants.hpp"
#include "toftomo/fock.hpp"

namespace test {

inline toftomo::OscillatorSpec rb_spec(double khz = 9.05, int n_max = 25) {
    return {toftomo::constants::rb87_mass, 2 * toftomo::constants::pi * khz * 1e3, n_max};
}

// Random mixed state of the given rank supported on the lowest `support` levels.
inline toftomo::DensityMatrix random_density(int dim, unsigned seed, int rank, int support = -1) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    if (support < 0) support = std::min(dim, 6);
    toftomo::CMatrix g = toftomo::CMatrix::Zero(dim, rank);
    for (int i = 0; i < support; ++i)
        for (int j = 0; j < rank; ++j) g(i, j) = {n(gen), n(gen)};
    toftomo::CMatrix m = g * g.adjoint();
    return toftomo::DensityMatrix::normalized(m);
}

}  // namespace test
