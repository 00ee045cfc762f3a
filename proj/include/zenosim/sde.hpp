#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "zenosim/linalg.hpp"
#include "zenosim/noise.hpp"
#include "zenosim/states.hpp"

namespace zenosim {

/// H_K = H0 + eta(t) K H1 with H0, H1 Hermitian and K >= 0.
struct ModelSpec {
    Matrix h0;
    Matrix h1;
    double coupling = 0.0;  // K

    ModelSpec(Matrix h0_in, Matrix h1_in, double k)
        : h0(std::move(h0_in)), h1(std::move(h1_in)), coupling(k) {
        if (h0.rows() != h0.cols() || h1.rows() != h1.cols() || h0.rows() != h1.rows())
            throw std::invalid_argument("ModelSpec: H0, H1 must be square and equal dimension");
        if (!is_hermitian(h0, 1e-12) || !is_hermitian(h1, 1e-12))
            throw std::invalid_argument("ModelSpec: H0, H1 must be Hermitian");
        if (!(coupling >= 0.0))
            throw std::invalid_argument("ModelSpec: coupling must be >= 0");
    }

    Eigen::Index dim() const { return h0.rows(); }
};

/// H = alpha sigma1 + beta eta(t) sigma3
struct TwoLevelParams {
    double alpha = 0.0;
    double beta = 0.0;

    TwoLevelParams(double a, double b) : alpha(a), beta(b) {
        if (!(beta >= 0.0)) throw std::invalid_argument("TwoLevelParams: beta must be >= 0");
    }

    ModelSpec to_model() const { return ModelSpec(alpha * pauli(1), pauli(3), beta); }
};

/// One splitting step is exp(-i H0 dt) * exp(-i K H1 dW): both factors
/// unitary, so the state stays exactly normalized per realization.
/// Precomputes the drift factor and the H1 eigenbasis once.
class SplitStepper {
public:
    SplitStepper(const ModelSpec& model, double dt)
        : dt_(dt), coupling_(model.coupling),
          drift_(matrix_exponential_hermitian(model.h0, dt)) {
        if (dt <= 0.0) throw std::invalid_argument("SplitStepper: dt must be positive");
        Eigensystem es = hermitian_eigendecomposition(model.h1);
        evals_ = es.values;
        // diagonal H1 needs no basis change in the noise factor
        Matrix off = model.h1;
        off.diagonal().setZero();
        diagonal_noise_ = off.cwiseAbs().maxCoeff() < 1e-14;
        if (diagonal_noise_) {
            evals_ = model.h1.diagonal().real();
        } else {
            basis_ = es.vectors;
            basis_adj_ = es.vectors.adjoint();
        }
        scratch_.resize(model.dim());
    }

    double dt() const { return dt_; }

    void apply(Vector& psi, double dw) {
        if (coupling_ != 0.0) {
            if (diagonal_noise_) {
                for (Eigen::Index i = 0; i < psi.size(); ++i)
                    psi(i) *= std::polar(1.0, -coupling_ * evals_(i) * dw);
            } else {
                scratch_.noalias() = basis_adj_ * psi;
                for (Eigen::Index i = 0; i < scratch_.size(); ++i)
                    scratch_(i) *= std::polar(1.0, -coupling_ * evals_(i) * dw);
                psi.noalias() = basis_ * scratch_;
            }
        }
        scratch_.noalias() = drift_ * psi;
        psi.swap(scratch_);
    }

    /// Same step applied to all columns of a propagator.
    void apply(Matrix& u, double dw) {
        if (coupling_ != 0.0) {
            if (diagonal_noise_) {
                for (Eigen::Index i = 0; i < u.rows(); ++i)
                    u.row(i) *= std::polar(1.0, -coupling_ * evals_(i) * dw);
            } else {
                Matrix w = basis_adj_ * u;
                for (Eigen::Index i = 0; i < w.rows(); ++i)
                    w.row(i) *= std::polar(1.0, -coupling_ * evals_(i) * dw);
                u.noalias() = basis_ * w;
            }
        }
        u = drift_ * u;
    }

private:
    double dt_;
    double coupling_;
    Matrix drift_;
    Eigen::VectorXd evals_;
    Matrix basis_, basis_adj_;
    bool diagonal_noise_ = false;
    Vector scratch_;
};

inline StateVector step_splitting(const StateVector& psi, const ModelSpec& model, double dt,
                                  double dw) {
    if (psi.dim() != model.dim())
        throw std::invalid_argument("step_splitting: state/model dimension mismatch");
    SplitStepper stepper(model, dt);
    Vector v = psi.amplitudes();
    stepper.apply(v, dw);
    return StateVector(std::move(v));
}

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<StateVector> states;
    std::vector<BlochVector> bloch;  // filled for dim 2
    SeedProvenance seed_provenance;
};

inline TrajectoryRecord evolve_trajectory(const ModelSpec& model, const StateVector& psi0,
                                          const NoisePath& path, std::size_t record_stride = 1) {
    if (psi0.dim() != model.dim())
        throw std::invalid_argument("evolve_trajectory: state/model dimension mismatch");
    if (record_stride < 1) throw std::invalid_argument("evolve_trajectory: stride must be >= 1");
    SplitStepper stepper(model, path.dt());
    bool two_level = model.dim() == 2;
    TrajectoryRecord rec;
    rec.seed_provenance = path.provenance();
    Vector v = psi0.amplitudes();
    auto record = [&](std::size_t step) {
        rec.times.push_back(static_cast<double>(step) * path.dt());
        StateVector s{v};
        if (two_level) rec.bloch.push_back(bloch_from_state(s));
        rec.states.push_back(std::move(s));
    };
    record(0);
    const auto& inc = path.increments();
    for (std::size_t k = 0; k < inc.size(); ++k) {
        stepper.apply(v, inc[k]);
        if ((k + 1) % record_stride == 0 || k + 1 == inc.size()) record(k + 1);
    }
    return rec;
}

/// Propagator U_K(t) over the whole path, built column-wise with the same
/// splitting steps.
inline Matrix noise_propagator(const ModelSpec& model, const NoisePath& path,
                               std::size_t n_steps) {
    if (n_steps > path.n_steps())
        throw std::invalid_argument("noise_propagator: n_steps exceeds path length");
    SplitStepper stepper(model, path.dt());
    Matrix u = Matrix::Identity(model.dim(), model.dim());
    for (std::size_t k = 0; k < n_steps; ++k) stepper.apply(u, path.increments()[k]);
    return u;
}

/// Euler-Maruyama on the Ito Bloch system dx = A x dt + B x dW with
///   A = [[-2b^2,0,0],[0,-2b^2,-2a],[0,2a,0]],  B = [[0,-2b,0],[2b,0,0],[0,0,0]].
inline std::vector<BlochVector> evolve_bloch_sde(const TwoLevelParams& params,
                                                 const BlochVector& x0, const NoisePath& path) {
    if (std::abs(x0.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("evolve_bloch_sde: initial Bloch vector must be unit norm");
    double a = params.alpha, b = params.beta;
    double dt = path.dt();
    std::vector<BlochVector> out;
    out.reserve(path.n_steps() + 1);
    BlochVector v = x0;
    out.push_back(v);
    for (double dw : path.increments()) {
        BlochVector n;
        n.x = v.x + dt * (-2.0 * b * b * v.x) + dw * (-2.0 * b * v.y);
        n.y = v.y + dt * (-2.0 * b * b * v.y - 2.0 * a * v.z) + dw * (2.0 * b * v.x);
        n.z = v.z + dt * (2.0 * a * v.y);
        v = n;
        out.push_back(v);
    }
    return out;
}

struct EnsembleRecord {
    std::vector<double> times;
    std::vector<BlochVector> mean_bloch;
    std::vector<BlochVector> stderr_bloch;  // per-component standard errors
    std::size_t n_traj = 0;
};

namespace detail {

// Trajectories are summed in fixed-size chunks and chunks reduced in index
// order, so the ensemble mean is bit-identical for any thread count.
constexpr std::size_t kEnsembleChunk = 64;

struct ChunkSums {
    std::vector<double> sx, sy, sz, qx, qy, qz;
};

}  // namespace detail

inline EnsembleRecord ensemble_average(const ModelSpec& model, const StateVector& psi0,
                                       std::size_t n_traj, std::uint64_t master_seed, double dt,
                                       std::size_t n_steps, std::size_t record_stride = 1,
                                       unsigned n_threads = 0) {
    if (n_traj < 2) throw std::domain_error("ensemble_average: n_traj must be >= 2");
    if (model.dim() != 2)
        throw std::invalid_argument("ensemble_average: Bloch averaging requires dim 2");
    if (record_stride < 1) throw std::invalid_argument("ensemble_average: stride must be >= 1");

    std::vector<std::size_t> record_steps;
    record_steps.push_back(0);
    for (std::size_t k = record_stride; k < n_steps; k += record_stride) record_steps.push_back(k);
    record_steps.push_back(n_steps);
    const std::size_t n_rec = record_steps.size();

    const std::size_t n_chunks = (n_traj + detail::kEnsembleChunk - 1) / detail::kEnsembleChunk;
    std::vector<detail::ChunkSums> chunks(n_chunks);

    auto run_chunk = [&](std::size_t c) {
        detail::ChunkSums& s = chunks[c];
        s.sx.assign(n_rec, 0.0); s.sy.assign(n_rec, 0.0); s.sz.assign(n_rec, 0.0);
        s.qx.assign(n_rec, 0.0); s.qy.assign(n_rec, 0.0); s.qz.assign(n_rec, 0.0);
        SplitStepper stepper(model, dt);
        std::size_t lo = c * detail::kEnsembleChunk;
        std::size_t hi = std::min(lo + detail::kEnsembleChunk, n_traj);
        for (std::size_t traj = lo; traj < hi; ++traj) {
            NoisePath path = generate_wiener_path(master_seed, traj, dt, n_steps);
            Vector v = psi0.amplitudes();
            std::size_t next = 0;
            auto accumulate = [&](std::size_t step) {
                while (next < n_rec && record_steps[next] == step) {
                    Complex cross = std::conj(v(0)) * v(1);
                    double bx = 2.0 * cross.real();
                    double by = 2.0 * cross.imag();
                    double bz = std::norm(v(0)) - std::norm(v(1));
                    s.sx[next] += bx; s.sy[next] += by; s.sz[next] += bz;
                    s.qx[next] += bx * bx; s.qy[next] += by * by; s.qz[next] += bz * bz;
                    ++next;
                }
            };
            accumulate(0);
            for (std::size_t k = 0; k < n_steps; ++k) {
                stepper.apply(v, path.increments()[k]);
                accumulate(k + 1);
            }
        }
    };

    unsigned hw = n_threads > 0 ? n_threads : std::max(1u, std::thread::hardware_concurrency());
    if (hw <= 1 || n_chunks == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::atomic<std::size_t> counter{0};
        std::vector<std::thread> pool;
        unsigned n_workers = std::min<std::size_t>(hw, n_chunks);
        for (unsigned w = 0; w < n_workers; ++w)
            pool.emplace_back([&]() {
                for (std::size_t c = counter.fetch_add(1); c < n_chunks; c = counter.fetch_add(1))
                    run_chunk(c);
            });
        for (auto& th : pool) th.join();
    }

    EnsembleRecord rec;
    rec.n_traj = n_traj;
    rec.times.resize(n_rec);
    rec.mean_bloch.resize(n_rec);
    rec.stderr_bloch.resize(n_rec);
    double n = static_cast<double>(n_traj);
    for (std::size_t r = 0; r < n_rec; ++r) {
        double sx = 0, sy = 0, sz = 0, qx = 0, qy = 0, qz = 0;
        for (std::size_t c = 0; c < n_chunks; ++c) {
            sx += chunks[c].sx[r]; sy += chunks[c].sy[r]; sz += chunks[c].sz[r];
            qx += chunks[c].qx[r]; qy += chunks[c].qy[r]; qz += chunks[c].qz[r];
        }
        rec.times[r] = static_cast<double>(record_steps[r]) * dt;
        BlochVector mean{sx / n, sy / n, sz / n};
        auto se = [&](double sum, double sumsq, double m) {
            double var = (sumsq - n * m * m) / (n - 1.0);
            // cancellation noise of the one-pass formula, e.g. at K = 0
            if (var < 1e-12 * (sumsq / n + 1e-300)) return 0.0;
            return std::sqrt(var / n);
        };
        rec.mean_bloch[r] = mean;
        rec.stderr_bloch[r] = BlochVector{se(sx, qx, mean.x), se(sy, qy, mean.y),
                                          se(sz, qz, mean.z)};
    }
    return rec;
}

}  // namespace zenosim
