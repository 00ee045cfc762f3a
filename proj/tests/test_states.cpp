#include <catch2/catch_amalgamated.hpp>

#include "zenosim/noise.hpp"
#include "zenosim/states.hpp"

using namespace zenosim;

namespace {

StateVector make_state(Complex a, Complex b) {
    Vector v(2);
    v << a, b;
    return StateVector(v);
}

}  // namespace

TEST_CASE("bloch_from_state on sigma eigenstates") {
    double s = 1.0 / std::sqrt(2.0);
    BlochVector up = bloch_from_state(make_state(1, 0));
    CHECK(up.x == Catch::Approx(0).margin(1e-14));
    CHECK(up.z == Catch::Approx(1));

    BlochVector plus = bloch_from_state(make_state(s, s));
    CHECK(plus.x == Catch::Approx(1));
    CHECK(plus.y == Catch::Approx(0).margin(1e-14));
    CHECK(plus.z == Catch::Approx(0).margin(1e-14));

    BlochVector ys = bloch_from_state(make_state(s, Complex(0, 1) * s));
    CHECK(ys.y == Catch::Approx(1));

    Vector v3 = Vector::Zero(3);
    v3(0) = 1.0;
    CHECK_THROWS_AS(bloch_from_state(StateVector(v3)), std::invalid_argument);
}

TEST_CASE("density_from_bloch basic forms") {
    Matrix mixed = density_from_bloch(BlochVector{0, 0, 0}).matrix();
    CHECK((mixed - 0.5 * Matrix::Identity(2, 2)).norm() < 1e-14);

    Matrix up = density_from_bloch(BlochVector{0, 0, 1}).matrix();
    CHECK(std::abs(up(0, 0) - Complex(1, 0)) < 1e-14);
    CHECK(std::abs(up(1, 1)) < 1e-14);

    Matrix xs = density_from_bloch(BlochVector{1, 0, 0}).matrix();
    CHECK(std::abs(xs(0, 1) - Complex(0.5, 0)) < 1e-14);
    CHECK(std::abs(xs(1, 0) - Complex(0.5, 0)) < 1e-14);

    CHECK_THROWS_AS(density_from_bloch(BlochVector{1.1, 0, 0}), std::invalid_argument);
}

TEST_CASE("bloch round-trip and purity properties") {
    detail::GaussianStream rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        // random point in the unit ball
        BlochVector b{rng.normal(), rng.normal(), rng.normal()};
        double r = b.norm();
        double target = rng.uniform01();
        b.x *= target / r;
        b.y *= target / r;
        b.z *= target / r;
        BlochVector back = bloch_from_density(density_from_bloch(b));
        CHECK(std::abs(back.x - b.x) < 1e-12);
        CHECK(std::abs(back.y - b.y) < 1e-12);
        CHECK(std::abs(back.z - b.z) < 1e-12);

        // random pure state has unit Bloch norm
        Vector v(2);
        v << Complex(rng.normal(), rng.normal()), Complex(rng.normal(), rng.normal());
        v.normalize();
        CHECK(std::abs(bloch_from_state(StateVector(v)).norm() - 1.0) < 1e-10);
    }
}

TEST_CASE("state and density validation") {
    Vector v(2);
    v << 0.7, 0.0;
    CHECK_THROWS_AS(StateVector(v), std::invalid_argument);

    // small norm drift is repaired
    v << 1.0 + 3e-7, 0.0;
    StateVector s(v);
    CHECK(std::abs(s.amplitudes().norm() - 1.0) < 1e-14);

    Matrix bad(2, 2);
    bad << 0.6, 0.3, 0.1, 0.4;
    CHECK_THROWS_AS(DensityMatrix(bad), std::invalid_argument);  // not Hermitian

    Matrix neg(2, 2);
    neg << 1.5, 0, 0, -0.5;
    CHECK_THROWS_AS(DensityMatrix(neg), std::invalid_argument);  // negative eigenvalue

    Matrix tr(2, 2);
    tr << 0.6, 0, 0, 0.6;
    CHECK_THROWS_AS(DensityMatrix(tr), std::invalid_argument);  // trace != 1
}
