// support.hpp — small helpers shared by the unit tests

#pragma once

#include "oqs/hilbert.hpp"

#include <random>

namespace testing_support {

inline oqs::Matrix random_matrix(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    oqs::Matrix m(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) m(i, j) = oqs::cplx(u(rng), u(rng));
    return m;
}

inline oqs::Matrix random_hermitian(int n, std::mt19937_64& rng) {
    oqs::Matrix m = random_matrix(n, rng);
    return 0.5 * (m + m.adjoint());
}

// Random positive, unit-trace matrix.
inline oqs::Matrix random_density(int n, std::mt19937_64& rng) {
    oqs::Matrix a = random_matrix(n, rng);
    oqs::Matrix r = a * a.adjoint();
    return r / r.trace().real();
}

} // namespace testing_support
