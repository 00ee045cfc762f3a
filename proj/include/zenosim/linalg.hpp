#pragma once

#include <complex>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace zenosim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

constexpr int kMaxDim = 64;

inline bool is_finite(const Matrix& m) {
    return m.allFinite();
}

inline bool is_hermitian(const Matrix& m, double tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * (1.0 + m.cwiseAbs().maxCoeff());
}

inline bool is_unitary(const Matrix& m, double tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    Matrix id = Matrix::Identity(m.rows(), m.cols());
    return (m.adjoint() * m - id).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_projector(const Matrix& m, double tol = 1e-10) {
    if (!is_hermitian(m, tol)) return false;
    return (m * m - m).cwiseAbs().maxCoeff() <= tol;
}

/// Standard Pauli matrix, index in {1,2,3}.
inline Matrix pauli(int index) {
    Matrix s(2, 2);
    switch (index) {
        case 1:
            s << 0, 1, 1, 0;
            break;
        case 2:
            s << 0, Complex(0, -1), Complex(0, 1), 0;
            break;
        case 3:
            s << 1, 0, 0, -1;
            break;
        default:
            throw std::domain_error("pauli: index must be 1, 2 or 3");
    }
    return s;
}

struct Eigensystem {
    Eigen::VectorXd values;  // ascending
    Matrix vectors;          // orthonormal columns, vectors.col(k) <-> values(k)
};

inline Eigensystem hermitian_eigendecomposition(const Matrix& h, double tol = 1e-10) {
    if (h.rows() != h.cols())
        throw std::domain_error("hermitian_eigendecomposition: matrix not square");
    if (h.rows() > kMaxDim)
        throw std::domain_error("hermitian_eigendecomposition: dimension exceeds 64");
    if (!is_finite(h))
        throw std::domain_error("hermitian_eigendecomposition: non-finite entries");
    if (!is_hermitian(h, tol))
        throw std::domain_error("hermitian_eigendecomposition: matrix not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eigendecomposition: solver failed");
    return Eigensystem{solver.eigenvalues(), solver.eigenvectors()};
}

/// exp(-i H t) for Hermitian H, via spectral decomposition. Unitary by construction.
inline Matrix matrix_exponential_hermitian(const Matrix& h, double t) {
    Eigensystem es = hermitian_eigendecomposition(h);
    Vector phases(es.values.size());
    for (Eigen::Index k = 0; k < es.values.size(); ++k)
        phases(k) = std::polar(1.0, -es.values(k) * t);
    return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

inline double frobenius_norm(const Matrix& m) {
    return m.norm();
}

}  // namespace zenosim
