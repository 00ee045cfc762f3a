#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "zenosim/linalg.hpp"
#include "zenosim/master.hpp"
#include "zenosim/noise.hpp"
#include "zenosim/sde.hpp"
#include "zenosim/states.hpp"

namespace zenosim {

/// Spectral decomposition of the noise operator H1 after degeneracy
/// grouping: distinct eigenvalues eta_n, orthogonal projectors P_n onto the
/// invariant subspaces, the projected Hamiltonian sum_n P_n H0 P_n, and the
/// diagonal-part superoperator rho -> sum_n P_n rho P_n.
struct ZenoDecomposition {
    std::vector<double> eigenvalues;
    std::vector<Matrix> projectors;
    Matrix h_diag;
    Matrix diag_superop;  // d^2 x d^2, column-stacking convention

    Eigen::Index dim() const { return h_diag.rows(); }
};

struct MeasurementSchedule {
    std::size_t n_measurements = 1;
    double interval = 0.0;

    MeasurementSchedule(std::size_t n, double dt) : n_measurements(n), interval(dt) {
        if (n < 1) throw std::invalid_argument("MeasurementSchedule: need N >= 1");
        if (!(dt > 0.0)) throw std::invalid_argument("MeasurementSchedule: interval must be > 0");
    }

    double total_time() const { return static_cast<double>(n_measurements) * interval; }
};

/// Clusters the spectrum of H1 with gap tolerance `degeneracy_tol`
/// (default 1e-8 * ||H1||). A gap falling between tol and 10*tol is
/// reported as an error: merging or splitting such a pair silently would
/// change the subspace structure.
inline ZenoDecomposition compute_zeno_subspaces(const Matrix& h1, const Matrix& h0,
                                                double degeneracy_tol = -1.0) {
    if (h0.rows() != h1.rows() || h0.cols() != h1.cols())
        throw std::invalid_argument("compute_zeno_subspaces: dimension mismatch");
    if (!is_hermitian(h0, 1e-10) || !is_hermitian(h1, 1e-10))
        throw std::invalid_argument("compute_zeno_subspaces: inputs must be Hermitian");
    Eigensystem es = hermitian_eigendecomposition(h1);
    Eigen::Index d = h1.rows();
    double tol = degeneracy_tol > 0.0 ? degeneracy_tol
                                      : 1e-8 * std::max(1.0, es.values.cwiseAbs().maxCoeff());
    for (Eigen::Index k = 0; k + 1 < d; ++k) {
        double gap = es.values(k + 1) - es.values(k);
        if (gap >= tol && gap < 10.0 * tol)
            throw std::runtime_error(
                "compute_zeno_subspaces: ambiguous eigenvalue clustering near gap " +
                std::to_string(gap));
    }
    ZenoDecomposition out;
    Eigen::Index start = 0;
    while (start < d) {
        Eigen::Index stop = start + 1;
        while (stop < d && es.values(stop) - es.values(stop - 1) < tol) ++stop;
        Matrix block = es.vectors.middleCols(start, stop - start);
        out.projectors.push_back(block * block.adjoint());
        double mean = es.values.segment(start, stop - start).mean();
        out.eigenvalues.push_back(mean);
        start = stop;
    }
    out.h_diag = Matrix::Zero(d, d);
    out.diag_superop = Matrix::Zero(d * d, d * d);
    for (const Matrix& p : out.projectors) {
        out.h_diag += p * h0 * p;
        out.diag_superop += Eigen::kroneckerProduct(p.transpose(), p).eval();
    }
    return out;
}

/// U(t) = exp(-i H_diag t); commutes with every P_n.
inline Matrix limiting_evolution(const ZenoDecomposition& decomp, double t) {
    return matrix_exponential_hermitian(decomp.h_diag, t);
}

/// U_K^I(t) = exp(+i K H1 W(t)) U_K(t), with U_K built by splitting steps
/// along the path. t must lie on the path grid.
inline Matrix interaction_picture_operator(const ModelSpec& model, const NoisePath& path,
                                           double t) {
    double steps_exact = t / path.dt();
    auto n = static_cast<std::size_t>(std::llround(steps_exact));
    if (std::abs(steps_exact - static_cast<double>(n)) > 1e-9 || n > path.n_steps())
        throw std::invalid_argument("interaction_picture_operator: t not on the path grid");
    Matrix u_k = noise_propagator(model, path, n);
    double w = 0.0;
    for (std::size_t k = 0; k < n; ++k) w += path.increments()[k];
    Matrix undo = matrix_exponential_hermitian(model.h1, -model.coupling * w);  // exp(+iKH1 W)
    return undo * u_k;
}

/// Frobenius norm of the off-diagonal-block part of U.
inline double subspace_leakage(const Matrix& u, const ZenoDecomposition& decomp) {
    Matrix diag = Matrix::Zero(u.rows(), u.cols());
    for (const Matrix& p : decomp.projectors) diag += p * u * p;
    return (u - diag).norm();
}

/// Nonselective measurement rho -> sum_n P_n rho P_n.
inline DensityMatrix apply_nonselective_measurement(const DensityMatrix& rho,
                                                    const ZenoDecomposition& decomp) {
    if (rho.dim() != decomp.dim())
        throw std::invalid_argument("apply_nonselective_measurement: dimension mismatch");
    Matrix out = Matrix::Zero(rho.dim(), rho.dim());
    for (const Matrix& p : decomp.projectors) out += p * rho.matrix() * p;
    out = 0.5 * (out + out.adjoint());
    return DensityMatrix(out);
}

/// Alternates exp(-i H0 interval) with a nonselective measurement, N times;
/// records the state after each measurement.
inline std::vector<DensityMatrix> pulsed_zeno_evolution(const DensityMatrix& rho0,
                                                        const Matrix& h0,
                                                        const ZenoDecomposition& decomp,
                                                        const MeasurementSchedule& schedule) {
    if (rho0.dim() != h0.rows() || rho0.dim() != decomp.dim())
        throw std::invalid_argument("pulsed_zeno_evolution: dimension mismatch");
    Matrix u = matrix_exponential_hermitian(h0, schedule.interval);
    std::vector<DensityMatrix> out;
    out.reserve(schedule.n_measurements);
    Matrix rho = rho0.matrix();
    for (std::size_t k = 0; k < schedule.n_measurements; ++k) {
        rho = u * rho * u.adjoint();
        Matrix measured = Matrix::Zero(rho.rows(), rho.cols());
        for (const Matrix& p : decomp.projectors) measured += p * rho * p;
        rho = 0.5 * (measured + measured.adjoint());
        rho /= rho.trace().real();  // scrub rounding drift over long schedules
        out.emplace_back(rho);
    }
    return out;
}

struct DecoherenceFreeReport {
    double max_residual = 0.0;
    bool pass = false;
};

/// Checks L(P^ E) = 0 on the full matrix-unit basis, where L is the
/// dissipative superoperator of the model and P^ the diagonal-part map.
inline DecoherenceFreeReport verify_decoherence_free(const ModelSpec& model,
                                                     const ZenoDecomposition& decomp,
                                                     double tol = 1e-10) {
    if (model.dim() != decomp.dim())
        throw std::invalid_argument("verify_decoherence_free: dimension mismatch");
    Matrix dissipator = build_liouvillian(model).dissipative_part;
    Matrix composed = dissipator * decomp.diag_superop;
    Eigen::Index d = model.dim();
    DecoherenceFreeReport report;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            Matrix unit = Matrix::Zero(d, d);
            unit(i, j) = 1.0;
            Matrix image = unvectorize(composed * vectorize(unit), d);
            report.max_residual = std::max(report.max_residual, image.norm());
        }
    report.pass = report.max_residual < tol;
    return report;
}

struct EquivalenceReport {
    double rate_noise = 0.0;
    double rate_pulsed = 0.0;
    double reference_rate = 0.0;  // 2 alpha^2 / beta^2
    double relative_difference = 0.0;
    double delta_t = 0.0;  // = beta^-2
};

/// Quantitative noise vs pulsed-measurement comparison at beta^-2 = delta t:
/// fits the z decay rate from a noise ensemble and from the pulsed
/// recursion, against the common prediction 2 alpha^2 / beta^2.
/// Requires the strong-noise regime beta^2 >= 10 alpha.
inline EquivalenceReport noise_measurement_equivalence(double alpha, double beta,
                                                       double t_final, std::size_t n_traj,
                                                       std::uint64_t master_seed,
                                                       double dt = 1e-3,
                                                       unsigned n_threads = 0) {
    double beta2 = beta * beta;
    if (!(beta2 >= 10.0 * alpha))
        throw std::invalid_argument(
            "noise_measurement_equivalence: requires beta^2 >= 10 alpha (strong-noise regime)");
    if (!(t_final > 0.0))
        throw std::invalid_argument("noise_measurement_equivalence: t_final must be > 0");

    EquivalenceReport report;
    report.reference_rate = 2.0 * alpha * alpha / beta2;
    report.delta_t = 1.0 / beta2;

    // noise side: ensemble mean of z under H = alpha s1 + beta eta s3
    TwoLevelParams params(alpha, beta);
    Vector up(2);
    up << 1.0, 0.0;
    auto n_steps = static_cast<std::size_t>(std::llround(t_final / dt));
    std::size_t stride = std::max<std::size_t>(1, n_steps / 50);
    EnsembleRecord ens = ensemble_average(params.to_model(), StateVector(up), n_traj,
                                          master_seed, dt, n_steps, stride, n_threads);
    std::vector<double> zs;
    std::vector<double> ts;
    for (std::size_t r = 0; r < ens.times.size(); ++r) {
        if (ens.mean_bloch[r].z > 0.0) {
            ts.push_back(ens.times[r]);
            zs.push_back(ens.mean_bloch[r].z);
        }
    }
    report.rate_noise = fit_exponential_rate(ts, zs);

    // pulsed side: z_N = (cos 2 alpha dt')^N at dt' = beta^-2
    double dtp = report.delta_t;
    auto n_meas = static_cast<std::size_t>(std::llround(t_final / dtp));
    double czz = std::cos(2.0 * alpha * dtp);
    std::vector<double> tp, zp;
    double z = 1.0;
    for (std::size_t k = 1; k <= n_meas; ++k) {
        z *= czz;
        tp.push_back(static_cast<double>(k) * dtp);
        zp.push_back(z);
    }
    report.rate_pulsed = fit_exponential_rate(tp, zp);

    double denom = std::max(std::abs(report.rate_noise), std::abs(report.rate_pulsed));
    report.relative_difference =
        denom > 0.0 ? std::abs(report.rate_noise - report.rate_pulsed) / denom : 0.0;
    return report;
}

}  // namespace zenosim
