#pragma once

#include <cmath>
#include <stdexcept>

#include "zenosim/linalg.hpp"

namespace zenosim {

struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

/// Normalized pure state. Renormalizes inputs within 1e-6 of unit norm
/// (integrator rounding); rejects anything further off.
class StateVector {
public:
    explicit StateVector(Vector amplitudes) : amplitudes_(std::move(amplitudes)) {
        if (amplitudes_.size() < 1)
            throw std::invalid_argument("StateVector: empty amplitude vector");
        if (!amplitudes_.allFinite())
            throw std::invalid_argument("StateVector: non-finite amplitudes");
        double n = amplitudes_.norm();
        if (std::abs(n - 1.0) > 1e-6)
            throw std::invalid_argument("StateVector: norm deviates from 1 by more than 1e-6");
        if (std::abs(n - 1.0) > 1e-12) amplitudes_ /= n;
    }

    Eigen::Index dim() const { return amplitudes_.size(); }
    const Vector& amplitudes() const { return amplitudes_; }

private:
    Vector amplitudes_;
};

class DensityMatrix {
public:
    explicit DensityMatrix(Matrix m) : matrix_(std::move(m)) {
        if (matrix_.rows() != matrix_.cols())
            throw std::invalid_argument("DensityMatrix: not square");
        if (!is_finite(matrix_))
            throw std::invalid_argument("DensityMatrix: non-finite entries");
        if (!is_hermitian(matrix_, 1e-12))
            throw std::invalid_argument("DensityMatrix: not Hermitian");
        if (std::abs(matrix_.trace().real() - 1.0) > 1e-12 ||
            std::abs(matrix_.trace().imag()) > 1e-12)
            throw std::invalid_argument("DensityMatrix: trace != 1");
        Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix_);
        if (solver.eigenvalues().minCoeff() < -1e-10)
            throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    }

    Eigen::Index dim() const { return matrix_.rows(); }
    const Matrix& matrix() const { return matrix_; }

private:
    Matrix matrix_;
};

/// x_i = <psi| sigma_i |psi>, two-level only.
inline BlochVector bloch_from_state(const StateVector& psi) {
    if (psi.dim() != 2)
        throw std::invalid_argument("bloch_from_state: requires dim 2");
    const Vector& a = psi.amplitudes();
    Complex cross = std::conj(a(0)) * a(1);
    BlochVector b;
    b.x = 2.0 * cross.real();
    b.y = 2.0 * cross.imag();
    b.z = std::norm(a(0)) - std::norm(a(1));
    return b;
}

/// rho = (1 + x.sigma)/2
inline DensityMatrix density_from_bloch(const BlochVector& b) {
    if (b.norm() > 1.0 + 1e-10)
        throw std::invalid_argument("density_from_bloch: Bloch vector outside unit ball");
    Matrix m(2, 2);
    m << Complex(0.5 * (1.0 + b.z), 0.0), Complex(0.5 * b.x, -0.5 * b.y),
         Complex(0.5 * b.x, 0.5 * b.y), Complex(0.5 * (1.0 - b.z), 0.0);
    return DensityMatrix(m);
}

inline BlochVector bloch_from_density(const DensityMatrix& rho) {
    if (rho.dim() != 2)
        throw std::invalid_argument("bloch_from_density: requires dim 2");
    const Matrix& m = rho.matrix();
    BlochVector b;
    b.x = 2.0 * m(1, 0).real();
    b.y = 2.0 * m(1, 0).imag();
    b.z = (m(0, 0) - m(1, 1)).real();
    return b;
}

inline DensityMatrix density_from_state(const StateVector& psi) {
    Matrix m = psi.amplitudes() * psi.amplitudes().adjoint();
    // projector onto a unit vector; trace is exactly |psi|^2
    return DensityMatrix(m);
}

}  // namespace zenosim
