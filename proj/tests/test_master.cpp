#include <catch2/catch_amalgamated.hpp>

#include "zenosim/builtin_models.hpp"
#include "zenosim/master.hpp"

using namespace zenosim;

namespace {

Matrix direct_generator_action(const ModelSpec& model, const Matrix& rho) {
    Complex mi(0.0, -1.0);
    Matrix h1sq = model.h1 * model.h1;
    double k2 = model.coupling * model.coupling;
    return mi * (model.h0 * rho - rho * model.h0) -
           0.5 * k2 * (h1sq * rho + rho * h1sq) + k2 * model.h1 * rho * model.h1;
}

}  // namespace

TEST_CASE("liouvillian superoperator matches the direct matrix formula") {
    ModelSpec model = TwoLevelParams(1.0, 1.0).to_model();
    LiouvillianParts parts = build_liouvillian(model);
    Matrix gen = parts.total();

    // maximally mixed state is stationary
    Matrix mixed = 0.5 * Matrix::Identity(2, 2);
    CHECK(unvectorize(gen * vectorize(mixed), 2).norm() < 1e-12);

    // diagonal rho is untouched by the sigma3 dissipator
    Matrix up = Matrix::Zero(2, 2);
    up(0, 0) = 1.0;
    CHECK(unvectorize(parts.dissipative_part * vectorize(up), 2).norm() < 1e-12);

    // random states: superoperator action equals the matrix expressions
    for (std::uint64_t seed : {4ULL, 5ULL, 6ULL}) {
        Matrix rho = random_hermitian(2, seed);
        Matrix via_superop = unvectorize(gen * vectorize(rho), 2);
        CHECK((via_superop - direct_generator_action(model, rho)).norm() < 1e-12);
    }

    // same consistency at dim 3 with a nontrivial coupling
    ModelSpec m3(three_level_h0(), three_level_h1(), 1.7);
    Matrix gen3 = build_liouvillian(m3).total();
    Matrix rho3 = random_hermitian(3, 8);
    CHECK((unvectorize(gen3 * vectorize(rho3), 3) - direct_generator_action(m3, rho3)).norm() <
          1e-12);
}

TEST_CASE("both liouvillian parts annihilate the trace and preserve hermiticity") {
    ModelSpec model(three_level_h0(), three_level_h1(), 2.0);
    LiouvillianParts parts = build_liouvillian(model);
    for (std::uint64_t seed : {1ULL, 2ULL}) {
        Matrix rho = random_hermitian(3, seed);
        Matrix f = unvectorize(parts.free_part * vectorize(rho), 3);
        Matrix d = unvectorize(parts.dissipative_part * vectorize(rho), 3);
        CHECK(std::abs(f.trace()) < 1e-12);
        CHECK(std::abs(d.trace()) < 1e-12);
        CHECK((f - f.adjoint()).norm() < 1e-12);
        CHECK((d - d.adjoint()).norm() < 1e-12);
    }
}

TEST_CASE("full two-level liouvillian has the maximally mixed stationary state") {
    Matrix gen = build_liouvillian(TwoLevelParams(1.0, 1.0).to_model()).total();
    Eigen::ComplexEigenSolver<Matrix> solver(gen);
    double closest_to_zero = solver.eigenvalues().cwiseAbs().minCoeff();
    CHECK(closest_to_zero < 1e-10);
    CHECK((gen * vectorize(0.5 * Matrix::Identity(2, 2))).norm() < 1e-10);
}

TEST_CASE("master integration: free case, stationarity and conservation laws") {
    TwoLevelParams params(1.0, 0.0);
    DensityMatrix up = density_from_bloch(BlochVector{0, 0, 1});
    auto rhos = integrate_master(up, params.to_model(), 3.0, 1e-3);
    for (std::size_t k = 0; k < rhos.size(); k += 271) {
        double t = static_cast<double>(k) * 1e-3;
        CHECK(std::abs(bloch_from_density(rhos[k]).z - std::cos(2.0 * t)) < 1e-8);
    }

    DensityMatrix mixed = density_from_bloch(BlochVector{0, 0, 0});
    auto stat = integrate_master(mixed, TwoLevelParams(1.0, 1.0).to_model(), 1.0, 1e-3);
    CHECK((stat.back().matrix() - 0.5 * Matrix::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("master integration matches the closed-form solution on both branches") {
    for (double beta : {0.5, 1.0, 2.0, 4.0}) {
        TwoLevelParams params(1.0, beta);
        DensityMatrix rho0 = density_from_bloch(BlochVector{0, 0, 1});
        double dt = 1e-3;
        auto rhos = integrate_master(rho0, params.to_model(), 5.0, dt);
        double worst = 0.0;
        for (std::size_t k = 0; k < rhos.size(); k += 97) {
            double t = static_cast<double>(k) * dt;
            BlochVector sim = bloch_from_density(rhos[k]);
            BlochVector ref = analytic_bloch_solution(params, BlochVector{0, 0, 1}, t);
            worst = std::max({worst, std::abs(sim.x - ref.x), std::abs(sim.y - ref.y),
                              std::abs(sim.z - ref.z)});
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("analytic solution: initial condition, branches and continuity") {
    BlochVector x0{0.3, -0.4, std::sqrt(1.0 - 0.09 - 0.16)};
    for (double beta : {0.0, 0.7, 1.9}) {
        BlochVector at0 = analytic_bloch_solution(TwoLevelParams(1.0, beta), x0, 0.0);
        CHECK(at0.x == Catch::Approx(x0.x));
        CHECK(at0.y == Catch::Approx(x0.y));
        CHECK(at0.z == Catch::Approx(x0.z));
    }

    // free case
    BlochVector rot = analytic_bloch_solution(TwoLevelParams(1.0, 0.0), BlochVector{0, 0, 1}, 0.8);
    CHECK(rot.y == Catch::Approx(-std::sin(1.6)));
    CHECK(rot.z == Catch::Approx(std::cos(1.6)));

    // hyperbolic branch asymptotics: beta^2 = 10, z(1) ~ exp(-2 alpha^2 t / beta^2)
    TwoLevelParams strong(1.0, std::sqrt(10.0));
    double z1 = analytic_bloch_solution(strong, BlochVector{0, 0, 1}, 1.0).z;
    CHECK(std::abs(z1 - std::exp(-0.2)) < 0.02 * std::exp(-0.2));

    // continuity across the branch point 4 alpha^2 = beta^4
    double beta_c = std::sqrt(std::sqrt(4.0));
    for (double eps : {1e-9, -1e-9}) {
        TwoLevelParams near_c(1.0, beta_c * (1.0 + eps));
        TwoLevelParams at_c(1.0, beta_c);
        for (double t : {0.3, 1.0, 2.5}) {
            BlochVector a = analytic_bloch_solution(near_c, BlochVector{0, 0, 1}, t);
            BlochVector b = analytic_bloch_solution(at_c, BlochVector{0, 0, 1}, t);
            CHECK(std::abs(a.z - b.z) < 1e-6);
            CHECK(std::abs(a.y - b.y) < 1e-6);
        }
    }

    // params struct carries the printed c1, c2
    AnalyticSolutionParams ap = make_analytic_params(TwoLevelParams(1.0, 1.0),
                                                     BlochVector{0.0, 0.5, 0.5});
    double w = std::sqrt(3.0);
    CHECK(ap.c1 == Catch::Approx((-0.5 - 1.0) / w));
    CHECK(ap.c2 == Catch::Approx((0.5 + 1.0) / w));
}

TEST_CASE("exponential rate fitting") {
    std::vector<double> ts{0.0, 1.0, 2.0};
    std::vector<double> vs{1.0, std::exp(-2.0), std::exp(-4.0)};
    CHECK(fit_exponential_rate(ts, vs) == Catch::Approx(2.0).epsilon(1e-12));

    std::vector<double> flat{1.0, 1.0, 1.0};
    CHECK(std::abs(fit_exponential_rate(ts, flat)) < 1e-14);

    // 1% multiplicative noise, 50 points
    detail::GaussianStream rng(404);
    std::vector<double> t2, v2;
    for (int k = 0; k < 50; ++k) {
        double t = 0.2 * k;
        t2.push_back(t);
        v2.push_back(std::exp(-0.2 * t) * (1.0 + 0.01 * rng.normal()));
    }
    CHECK(std::abs(fit_exponential_rate(t2, v2) - 0.2) < 0.05 * 0.2);

    std::vector<double> bad{1.0, -0.5, 0.2};
    CHECK_THROWS_AS(fit_exponential_rate(ts, bad), std::domain_error);
}
