#include <catch2/catch_amalgamated.hpp>

#include "zenosim/builtin_models.hpp"
#include "zenosim/master.hpp"
#include "zenosim/sde.hpp"

using namespace zenosim;

namespace {

StateVector up_state() {
    Vector v(2);
    v << 1.0, 0.0;
    return StateVector(v);
}

}  // namespace

TEST_CASE("splitting step: deterministic limit and exact norm") {
    TwoLevelParams params(1.0, 0.0);
    ModelSpec model = params.to_model();
    double dt = 0.05;
    StateVector next = step_splitting(up_state(), model, dt, 0.0);
    Vector expected = matrix_exponential_hermitian(model.h0, dt) * up_state().amplitudes();
    CHECK((next.amplitudes() - expected).norm() < 1e-14);

    ModelSpec noisy = TwoLevelParams(1.0, 2.0).to_model();
    Vector v(2);
    v << Complex(0.6, 0.0), Complex(0.0, 0.8);
    StateVector after = step_splitting(StateVector(v), noisy, 1e-3, 0.07);
    CHECK(std::abs(after.amplitudes().norm() - 1.0) < 1e-14);

    Vector v3 = Vector::Zero(3);
    v3(0) = 1.0;
    CHECK_THROWS_AS(step_splitting(StateVector(v3), noisy, 1e-3, 0.0), std::invalid_argument);
}

TEST_CASE("splitting step reproduces the Lindblad drift in expectation") {
    // start from a state with nonzero y so dz/dt = 2 alpha y is nonzero
    double s = 1.0 / std::sqrt(2.0);
    Vector v(2);
    v << Complex(s, 0.0), Complex(0.0, s);  // Bloch (0, 1, 0)
    StateVector psi(v);
    TwoLevelParams params(1.0, 1.0);
    ModelSpec model = params.to_model();
    double dt = 1e-3;
    SplitStepper stepper(model, dt);

    const std::size_t n = 100000;
    detail::GaussianStream rng(555);
    double mean_dz = 0.0, mean_dy = 0.0;
    BlochVector b0 = bloch_from_state(psi);
    for (std::size_t k = 0; k < n; ++k) {
        Vector w = psi.amplitudes();
        stepper.apply(w, std::sqrt(dt) * rng.normal());
        BlochVector b = bloch_from_state(StateVector(w));
        mean_dz += b.z - b0.z;
        mean_dy += b.y - b0.y;
    }
    mean_dz /= static_cast<double>(n);
    mean_dy /= static_cast<double>(n);
    // Lindblad right-hand sides at (0,1,0): dz/dt = 2ay = 2, dy/dt = -2az -2b^2 y = -2
    CHECK(std::abs(mean_dz / dt - 2.0) < 0.05);
    CHECK(std::abs(mean_dy / dt + 2.0) < 0.05);
}

TEST_CASE("noise-free trajectory reproduces Rabi rotation") {
    TwoLevelParams params(1.0, 0.0);
    std::size_t n = 2000;
    double dt = 1e-3;
    NoisePath path(dt, std::vector<double>(n, 0.0), {0, 0});
    TrajectoryRecord traj = evolve_trajectory(params.to_model(), up_state(), path);
    for (std::size_t k = 0; k < traj.times.size(); k += 137) {
        double t = traj.times[k];
        CHECK(std::abs(traj.bloch[k].z - std::cos(2.0 * t)) < 1e-9);
        CHECK(std::abs(traj.bloch[k].y + std::sin(2.0 * t)) < 1e-9);
        CHECK(std::abs(traj.bloch[k].x) < 1e-9);
    }
}

TEST_CASE("per-realization purity along the grid") {
    ModelSpec model = TwoLevelParams(1.0, 2.0).to_model();
    NoisePath path = generate_wiener_path(77, 0, 1e-3, 3000);
    TrajectoryRecord traj = evolve_trajectory(model, up_state(), path);
    double worst = 0.0;
    for (const auto& b : traj.bloch) worst = std::max(worst, std::abs(b.norm() - 1.0));
    CHECK(worst < 1e-10);
}

TEST_CASE("strong convergence under path refinement") {
    ModelSpec model = TwoLevelParams(1.0, 1.0).to_model();
    NoisePath coarse = generate_wiener_path(13, 1, 4e-3, 250);  // t = 1
    NoisePath mid = refine_path(coarse, 4);
    NoisePath reference = refine_path(mid, 16);

    auto final_state = [&](const NoisePath& p) {
        return evolve_trajectory(model, up_state(), p, p.n_steps()).states.back().amplitudes();
    };
    Vector ref = final_state(reference);
    double err_coarse = (final_state(coarse) - ref).norm();
    double err_mid = (final_state(mid) - ref).norm();
    CHECK(err_mid * 2.0 <= err_coarse);
}

TEST_CASE("bloch SDE: Euler-Maruyama step matches the printed matrices") {
    // single hand-computed Euler step at alpha = 1, beta = 1:
    // row 2 of A is (0, -2, -2), B couples x and y with +-2 beta
    TwoLevelParams params(1.0, 1.0);
    double dt = 0.01, dw = 0.05;
    NoisePath path(dt, {dw}, {0, 0});
    BlochVector x0{0.6, 0.8, 0.0};
    auto out = evolve_bloch_sde(params, x0, path);
    REQUIRE(out.size() == 2);
    CHECK(out[1].x == Catch::Approx(0.6 + dt * (-2.0 * 0.6) + dw * (-2.0 * 0.8)));
    CHECK(out[1].y == Catch::Approx(0.8 + dt * (-2.0 * 0.8 - 2.0 * 0.0) + dw * (2.0 * 0.6)));
    CHECK(out[1].z == Catch::Approx(0.0 + dt * (2.0 * 0.8)));
}

TEST_CASE("bloch SDE: beta = 0 reduces to rigid rotation") {
    TwoLevelParams params(1.0, 0.0);
    std::size_t n = 1000;
    double dt = 1e-3;
    NoisePath path(dt, std::vector<double>(n, 0.0), {0, 0});
    auto out = evolve_bloch_sde(params, BlochVector{0, 0, 1}, path);
    double t = 1.0;
    CHECK(std::abs(out.back().z - std::cos(2.0 * t)) < 5e-3);  // O(dt) Euler error
    CHECK(std::abs(out.back().y + std::sin(2.0 * t)) < 5e-3);
}

TEST_CASE("cross-engine consistency on a common path") {
    TwoLevelParams params(1.0, 1.0);
    ModelSpec model = params.to_model();

    auto discrepancy = [&](const NoisePath& p) {
        TrajectoryRecord traj = evolve_trajectory(model, up_state(), p, p.n_steps());
        auto bloch = evolve_bloch_sde(params, BlochVector{0, 0, 1}, p);
        BlochVector a = traj.bloch.back();
        BlochVector b = bloch.back();
        return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                         (a.z - b.z) * (a.z - b.z));
    };
    // strong error is random per path; compare means over an ensemble
    double mean_coarse = 0.0, mean_fine = 0.0;
    const std::size_t n_paths = 20;
    for (std::uint64_t s = 0; s < n_paths; ++s) {
        NoisePath coarse = generate_wiener_path(21, s, 2e-3, 500);
        mean_coarse += discrepancy(coarse);
        mean_fine += discrepancy(refine_path(coarse, 4));
    }
    mean_coarse /= n_paths;
    mean_fine /= n_paths;
    CHECK(mean_fine < mean_coarse);
    CHECK(mean_fine < 0.1);
}

TEST_CASE("ensemble: K = 0 gives zero stderr and the deterministic trajectory") {
    ModelSpec model = TwoLevelParams(1.0, 0.0).to_model();
    EnsembleRecord ens = ensemble_average(model, up_state(), 10, 1, 1e-3, 1000, 100);
    for (std::size_t r = 0; r < ens.times.size(); ++r) {
        CHECK(ens.stderr_bloch[r].x == 0.0);
        CHECK(ens.stderr_bloch[r].z == 0.0);
        CHECK(std::abs(ens.mean_bloch[r].z - std::cos(2.0 * ens.times[r])) < 1e-9);
    }
    CHECK_THROWS_AS(ensemble_average(model, up_state(), 1, 1, 1e-3, 10), std::domain_error);
}

TEST_CASE("ensemble mean is bit-identical across thread counts") {
    ModelSpec model = TwoLevelParams(1.0, 1.0).to_model();
    EnsembleRecord serial = ensemble_average(model, up_state(), 500, 99, 1e-3, 500, 50, 1);
    EnsembleRecord parallel = ensemble_average(model, up_state(), 500, 99, 1e-3, 500, 50, 4);
    REQUIRE(serial.times.size() == parallel.times.size());
    for (std::size_t r = 0; r < serial.times.size(); ++r) {
        CHECK(serial.mean_bloch[r].x == parallel.mean_bloch[r].x);
        CHECK(serial.mean_bloch[r].y == parallel.mean_bloch[r].y);
        CHECK(serial.mean_bloch[r].z == parallel.mean_bloch[r].z);
        CHECK(serial.stderr_bloch[r].z == parallel.stderr_bloch[r].z);
    }
}

TEST_CASE("ensemble mean tracks the analytic solution") {
    TwoLevelParams params(1.0, 1.0);
    std::size_t n_steps = 2000;
    EnsembleRecord ens =
        ensemble_average(params.to_model(), up_state(), 2000, 7, 1e-3, n_steps, 200);
    for (std::size_t r = 1; r < ens.times.size(); ++r) {
        BlochVector ref = analytic_bloch_solution(params, BlochVector{0, 0, 1}, ens.times[r]);
        CHECK(std::abs(ens.mean_bloch[r].z - ref.z) <
              5.0 * std::max(ens.stderr_bloch[r].z, 1e-4));
        CHECK(std::abs(ens.mean_bloch[r].y - ref.y) <
              5.0 * std::max(ens.stderr_bloch[r].y, 1e-4));
        // mean norm stays inside the ball up to sampling error
        CHECK(ens.mean_bloch[r].norm() <= 1.0 + 3.0 * ens.stderr_bloch[r].norm() + 1e-12);
    }
}

TEST_CASE("x component decays at rate 2 beta^2") {
    // x(0) = 1 initial state: |+> eigenstate of sigma1
    double s = 1.0 / std::sqrt(2.0);
    Vector v(2);
    v << s, s;
    TwoLevelParams params(1.0, 1.0);
    EnsembleRecord ens =
        ensemble_average(params.to_model(), StateVector(v), 4000, 17, 1e-3, 1500, 100);
    std::vector<double> ts, xs;
    for (std::size_t r = 0; r < ens.times.size(); ++r) {
        if (ens.mean_bloch[r].x > 0.02) {
            ts.push_back(ens.times[r]);
            xs.push_back(ens.mean_bloch[r].x);
        }
    }
    double rate = fit_exponential_rate(ts, xs);
    CHECK(std::abs(rate - 2.0) < 0.25);
}
