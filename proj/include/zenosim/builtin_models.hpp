#pragma once

#include <cstdint>

#include "zenosim/linalg.hpp"
#include "zenosim/noise.hpp"

namespace zenosim {

/// Bundled three-level example with a degenerate noise operator: the
/// eta = 1 eigenspace is two-dimensional, so the decomposition has a
/// rank-2 projector and a rank-1 projector.
inline Matrix three_level_h1() {
    Matrix h = Matrix::Zero(3, 3);
    h(0, 0) = 1.0;
    h(1, 1) = 1.0;
    h(2, 2) = 2.0;
    return h;
}

inline Matrix three_level_h0() {
    Matrix h(3, 3);
    h << Complex(0.30, 0.00), Complex(0.20, -0.10), Complex(0.00, 0.40),
         Complex(0.20, 0.10), Complex(-0.10, 0.00), Complex(0.25, 0.15),
         Complex(0.00, -0.40), Complex(0.25, -0.15), Complex(0.50, 0.00);
    return h;
}

/// Seeded GUE-style random Hermitian matrix, entries O(1).
inline Matrix random_hermitian(Eigen::Index dim, std::uint64_t seed) {
    detail::GaussianStream rng(detail::derive_seed(seed, 0, 0x72616e64ULL));
    Matrix h(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        h(i, i) = rng.normal();
        for (Eigen::Index j = i + 1; j < dim; ++j) {
            Complex v(rng.normal() / std::sqrt(2.0), rng.normal() / std::sqrt(2.0));
            h(i, j) = v;
            h(j, i) = std::conj(v);
        }
    }
    return h;
}

}  // namespace zenosim
