#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "susp/quadrature.hpp"
#include "susp/tensor.hpp"
#include "test_util.hpp"

using namespace susp;
using namespace susp::testutil;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("sym_trace_free_project: identity maps to zero") {
    const StrainTensor s = sym_trace_free_project(Mat3::identity());
    CHECK(s.norm() < 1e-15);
}

TEST_CASE("sym_trace_free_project: fixed point on Sym_{3,sigma} and idempotent") {
    RngStream rng(11, 0);
    for (int t = 0; t < 50; ++t) {
        Mat3 m;
        for (int i = 0; i < 9; ++i) m.a[i] = 2.0 * rng.next_double() - 1.0;
        const StrainTensor p1 = sym_trace_free_project(m);
        const StrainTensor p2 = sym_trace_free_project(p1.m);
        CHECK((p2 - p1).norm() < 1e-13);
        CHECK(p1.is_valid(1e-13));
        // already projected input is returned unchanged
        const StrainTensor p3 = sym_trace_free_project(p1.m);
        CHECK((p3 - p1).norm() < 1e-15);
    }
}

TEST_CASE("sym_trace_free_project: diag(1,0,0)") {
    Mat3 m;
    m(0, 0) = 1.0;
    const StrainTensor p = sym_trace_free_project(m);
    CHECK(p(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(p(1, 1) == doctest::Approx(-1.0 / 3.0));
    CHECK(p(2, 2) == doctest::Approx(-1.0 / 3.0));
    CHECK(std::abs(p(0, 1)) < 1e-15);
}

TEST_CASE("sym_trace_free_project rejects non-finite input") {
    Mat3 m;
    m(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(sym_trace_free_project(m), std::invalid_argument);
}

TEST_CASE("strain basis is orthonormal") {
    const auto& b = strain_basis();
    for (int j = 0; j < 5; ++j)
        for (int k = 0; k < 5; ++k)
            CHECK(std::abs(b[j].contract(b[k]) - (j == k ? 1.0 : 0.0)) < 1e-13);
}

TEST_CASE("visc_apply: identity, zero, and basis outer product") {
    RngStream rng(12, 0);
    const StrainTensor s = random_strain(rng);
    CHECK((visc_apply(ViscTensor::identity(), s) - s).norm() < 1e-14);
    CHECK(visc_apply(ViscTensor::zero(), s).norm() == 0.0);
    const auto& b = strain_basis();
    const ViscTensor t = ViscTensor::outer(b[2], b[2]);
    CHECK((visc_apply(t, b[2]) - b[2]).norm() < 1e-14);
    CHECK(visc_apply(t, b[0]).norm() < 1e-14);
}

TEST_CASE("coords round trip and linearity of visc_apply") {
    RngStream rng(13, 0);
    for (int t = 0; t < 20; ++t) {
        const StrainTensor s = random_strain(rng);
        CHECK((strain_from_coords(strain_to_coords(s)) - s).norm() < 1e-14);
    }
}

TEST_CASE("solve_i_minus inverts (I - A)") {
    RngStream rng(14, 0);
    ViscTensor a;
    for (int i = 0; i < 25; ++i) a.a[i] = 0.1 * (2.0 * rng.next_double() - 1.0);
    const ViscTensor x = solve_i_minus(a, a);
    // (I - A) X = A
    ViscTensor lhs = x - a.matmul(x);
    CHECK((lhs - a).max_abs() < 1e-13);
}

TEST_CASE("sphere quadrature: constants, x(x)x, trace-free pairing") {
    for (int order : {2, 6, 11, 20}) {
        const SphereQuadrature q = sphere_quadrature(order);
        double total = 0;
        for (double w : q.weights) {
            CHECK(w > 0.0);
            total += w;
        }
        CHECK(std::abs(total - 4.0 * kPi) < 1e-12);

        Mat3 xx = Mat3::zero();
        for (std::size_t k = 0; k < q.size(); ++k)
            xx += q.weights[k] * Mat3::outer(q.nodes[k], q.nodes[k]);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(std::abs(xx(i, j) - (i == j ? 4.0 * kPi / 3.0 : 0.0)) < 1e-10);

        RngStream rng(15, order);
        const StrainTensor s = random_strain(rng);
        double sxx = 0;
        for (std::size_t k = 0; k < q.size(); ++k) sxx += q.weights[k] * s.quad(q.nodes[k]);
        CHECK(std::abs(sxx) < 1e-10);
    }
    CHECK_THROWS_AS(sphere_quadrature(1), std::invalid_argument);
}

TEST_CASE("sphere quadrature integrates monomials to the declared degree") {
    // analytic value of int x1^a x2^b x3^c over the sphere: zero for odd exponents,
    // 4 pi (a-1)!!(b-1)!!(c-1)!! / (a+b+c+1)!! otherwise
    const auto dfact = [](int n) {
        double f = 1;
        for (int k = n; k > 1; k -= 2) f *= k;
        return f;
    };
    const int order = 8;
    const SphereQuadrature q = sphere_quadrature(order);
    for (int a = 0; a <= order; ++a)
        for (int b = 0; a + b <= order; ++b)
            for (int c = 0; a + b + c <= order; ++c) {
                double acc = 0;
                for (std::size_t k = 0; k < q.size(); ++k)
                    acc += q.weights[k] * std::pow(q.nodes[k].x, a) * std::pow(q.nodes[k].y, b) *
                           std::pow(q.nodes[k].z, c);
                double exact = 0.0;
                if (a % 2 == 0 && b % 2 == 0 && c % 2 == 0)
                    exact = 4.0 * kPi * dfact(a - 1) * dfact(b - 1) * dfact(c - 1) /
                            dfact(a + b + c + 1);
                CHECK(std::abs(acc - exact) < 1e-10);
            }
}

TEST_CASE("ball quadrature volume and radial moments") {
    const BallQuadrature b = ball_quadrature(6, 8);
    double vol = 0, r2 = 0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        vol += b.weights[k];
        r2 += b.weights[k] * b.nodes[k].norm2();
    }
    CHECK(std::abs(vol - 4.0 * kPi / 3.0) < 1e-12);
    CHECK(std::abs(r2 - 4.0 * kPi / 5.0) < 1e-12);  // int |x|^2 over unit ball
}

TEST_CASE("rotation action preserves the Frobenius pairing") {
    RngStream rng(16, 0);
    for (int t = 0; t < 10; ++t) {
        const Mat3 r = rotation(random_unit(rng), 2.0 * kPi * rng.next_double());
        const StrainTensor a = random_strain(rng), b = random_strain(rng);
        CHECK(std::abs(rotate(a, r).contract(rotate(b, r)) - a.contract(b)) < 1e-12);
    }
}
