#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "zenosim/linalg.hpp"
#include "zenosim/sde.hpp"
#include "zenosim/states.hpp"

namespace zenosim {

/// Column-stacking convention throughout: vec(A X B) = (B^T kron A) vec(X).
inline Vector vectorize(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvectorize(const Vector& v, Eigen::Index dim) {
    if (v.size() != dim * dim) throw std::invalid_argument("unvectorize: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

/// L0 rho = -i[H0, rho];  L rho = -1/2 {H1^2, rho} + H1 rho H1.
/// Full generator is L0 + K^2 L.
struct LiouvillianParts {
    Matrix free_part;         // d^2 x d^2
    Matrix dissipative_part;  // d^2 x d^2, K-independent
    double coupling = 0.0;

    Matrix total() const { return free_part + coupling * coupling * dissipative_part; }
};

inline LiouvillianParts build_liouvillian(const ModelSpec& model) {
    Eigen::Index d = model.dim();
    Matrix id = Matrix::Identity(d, d);
    const Matrix& h0 = model.h0;
    const Matrix& h1 = model.h1;
    Matrix h1sq = h1 * h1;
    Complex mi(0.0, -1.0);
    LiouvillianParts parts;
    parts.free_part = mi * (Eigen::kroneckerProduct(id, h0).eval() -
                            Eigen::kroneckerProduct(h0.transpose(), id).eval());
    parts.dissipative_part =
        Eigen::kroneckerProduct(h1.transpose(), h1).eval() -
        0.5 * (Eigen::kroneckerProduct(id, h1sq).eval() +
               Eigen::kroneckerProduct(h1sq.transpose(), id).eval());
    parts.coupling = model.coupling;
    return parts;
}

/// RK4 on the vectorized generator; works for any initial matrix, not just
/// valid density matrices (used on matrix units in tests).
inline std::vector<Matrix> integrate_liouville(const Matrix& rho0, const Matrix& generator,
                                               double t_final, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("integrate_liouville: dt must be positive");
    if (t_final < dt) throw std::invalid_argument("integrate_liouville: t_final must be >= dt");
    Eigen::Index d = rho0.rows();
    auto n_steps = static_cast<std::size_t>(std::llround(t_final / dt));
    Vector v = vectorize(rho0);
    std::vector<Matrix> out;
    out.reserve(n_steps + 1);
    out.push_back(rho0);
    for (std::size_t k = 0; k < n_steps; ++k) {
        Vector k1 = generator * v;
        Vector k2 = generator * (v + 0.5 * dt * k1);
        Vector k3 = generator * (v + 0.5 * dt * k2);
        Vector k4 = generator * (v + dt * k3);
        v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push_back(unvectorize(v, d));
    }
    return out;
}

inline std::vector<DensityMatrix> integrate_master(const DensityMatrix& rho0,
                                                   const ModelSpec& model, double t_final,
                                                   double dt) {
    if (rho0.dim() != model.dim())
        throw std::invalid_argument("integrate_master: dimension mismatch");
    Matrix generator = build_liouvillian(model).total();
    std::vector<Matrix> raw = integrate_liouville(rho0.matrix(), generator, t_final, dt);
    std::vector<DensityMatrix> out;
    out.reserve(raw.size());
    for (auto& m : raw) {
        double drift = std::abs(m.trace().real() - 1.0) + std::abs(m.trace().imag());
        if (drift > 1e-6)
            throw std::runtime_error("integrate_master: trace drift exceeds 1e-6, step unstable");
        Matrix sym = 0.5 * (m + m.adjoint());  // scrub eigensolver-scale asymmetry
        sym *= 1.0 / sym.trace().real();
        out.emplace_back(sym);
    }
    return out;
}

/// omega = sqrt(4 alpha^2 - beta^4), kept complex to cover the hyperbolic
/// branch; c1, c2 fix the y, z initial conditions.
struct AnalyticSolutionParams {
    double alpha = 0.0;
    double beta = 0.0;
    Complex omega;
    double c1 = 0.0;
    double c2 = 0.0;
};

namespace detail {

// cos(w t) and sin(w t)/w as functions of w^2, valid on both branches and
// through w = 0 (series there; the printed formulas divide by w).
inline double cos_branch(double w2, double t) {
    double s = w2 * t * t;
    if (std::abs(s) < 1e-8) return 1.0 - s / 2.0 + s * s / 24.0;
    if (w2 > 0.0) return std::cos(std::sqrt(w2) * t);
    return std::cosh(std::sqrt(-w2) * t);
}

inline double sinc_branch(double w2, double t) {
    double s = w2 * t * t;
    if (std::abs(s) < 1e-8) return t * (1.0 - s / 6.0 + s * s / 120.0);
    if (w2 > 0.0) {
        double w = std::sqrt(w2);
        return std::sin(w * t) / w;
    }
    double w = std::sqrt(-w2);
    return std::sinh(w * t) / w;
}

}  // namespace detail

inline AnalyticSolutionParams make_analytic_params(const TwoLevelParams& p,
                                                   const BlochVector& x0) {
    AnalyticSolutionParams out;
    out.alpha = p.alpha;
    out.beta = p.beta;
    double w2 = 4.0 * p.alpha * p.alpha - std::pow(p.beta, 4);
    out.omega = w2 >= 0.0 ? Complex(std::sqrt(w2), 0.0) : Complex(0.0, std::sqrt(-w2));
    double b2 = p.beta * p.beta;
    if (std::abs(out.omega) > 0.0) {
        double w = w2 >= 0.0 ? std::sqrt(w2) : std::sqrt(-w2);
        out.c1 = (-b2 * x0.y - 2.0 * p.alpha * x0.z) / w;
        out.c2 = (b2 * x0.z + 2.0 * p.alpha * x0.y) / w;
    }
    return out;
}

/// Closed-form noise-averaged Bloch solution:
///   x(t) = x0 exp(-2 b^2 t)
///   y(t) = exp(-b^2 t) (y0 cos(w t) + c1 sin(w t)),  c1 = (-b^2 y0 - 2a z0)/w
///   z(t) = exp(-b^2 t) (z0 cos(w t) + c2 sin(w t)),  c2 = ( b^2 z0 + 2a y0)/w
/// with w^2 = 4a^2 - b^4; hyperbolic branch for w^2 < 0, series at w = 0.
inline BlochVector analytic_bloch_solution(const TwoLevelParams& p, const BlochVector& x0,
                                           double t) {
    if (t < 0.0) throw std::invalid_argument("analytic_bloch_solution: t must be >= 0");
    double a = p.alpha;
    double b2 = p.beta * p.beta;
    double w2 = 4.0 * a * a - b2 * b2;
    double decay = std::exp(-b2 * t);
    double cw = detail::cos_branch(w2, t);
    double sw = detail::sinc_branch(w2, t);  // sin(w t)/w
    BlochVector out;
    out.x = x0.x * std::exp(-2.0 * b2 * t);
    out.y = decay * (x0.y * cw + (-b2 * x0.y - 2.0 * a * x0.z) * sw);
    out.z = decay * (x0.z * cw + (b2 * x0.z + 2.0 * a * x0.y) * sw);
    return out;
}

/// Least-squares slope of -log(values) against times.
inline double fit_exponential_rate(const std::vector<double>& times,
                                   const std::vector<double>& values) {
    if (times.size() != values.size() || times.size() < 3)
        throw std::invalid_argument("fit_exponential_rate: need >= 3 aligned points");
    double n = static_cast<double>(times.size());
    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(values[i] > 0.0))
            throw std::domain_error("fit_exponential_rate: values must be positive");
        double l = -std::log(values[i]);
        st += times[i];
        sl += l;
        stt += times[i] * times[i];
        stl += times[i] * l;
    }
    double denom = n * stt - st * st;
    if (denom == 0.0) throw std::invalid_argument("fit_exponential_rate: degenerate time grid");
    return (n * stl - st * sl) / denom;
}

}  // namespace zenosim
