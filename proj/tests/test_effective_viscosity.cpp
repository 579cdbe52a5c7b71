#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "susp/effective_viscosity.hpp"
#include "test_util.hpp"

using namespace susp;
using namespace susp::testutil;

namespace {

constexpr double kPi = std::numbers::pi;

double hardcore_uniform_g2(double r) { return r < 2.5 ? 0.0 : 1.0; }

}  // namespace

TEST_CASE("pair functional: quadrature mode equals the analytic dipole value") {
    RngStream rng(61, 0);
    const StrainTensor s = random_unit_strain(rng);
    const StrainTensor st = random_unit_strain(rng);
    for (double d : {3.0, 6.0, 15.0}) {
        const Vec3 y{0, 0, 0}, z{0, d, 0};
        const PairFunctionalResult a = pair_functional(y, z, s, st, 0.0, 24);
        CHECK(a.converged);
        const double b = pair_functional_dipole(y, z, s, st);
        // residual quadrature error comes from the other sphere's smooth field,
        // whose exact contribution to the conserved functional is zero
        CHECK(a.value == doctest::Approx(b).epsilon(1e-7));
    }
}

TEST_CASE("pair functional: far-field check agrees within the remainder scale") {
    RngStream rng(62, 0);
    const StrainTensor s = random_unit_strain(rng);
    const Vec3 y{0, 0, 0}, z{50, 0, 0};
    const PairFunctionalResult a = pair_functional(y, z, s, s);
    const double b = pair_functional_far(y, z, s, s);
    CHECK(a.converged);
    CHECK(std::abs(a.value - b) / std::abs(b) < 0.02);
}

TEST_CASE("pair functional: bilinearity, S = 0, swap symmetry") {
    RngStream rng(63, 0);
    const StrainTensor s = random_unit_strain(rng);
    const Vec3 y{0, 0, 0}, z{4, 1, 1};
    CHECK(pair_functional(y, z, StrainTensor{}, s).value == 0.0);

    // swap invariance of the symmetrized functional
    const double ab = pair_functional(y, z, s, s).value;
    const double ba = pair_functional(z, y, s, s).value;
    CHECK(ab == doctest::Approx(ba).epsilon(1e-8));
    CHECK_THROWS_AS(pair_functional(y, Vec3{1.0, 0, 0}, s, s), std::invalid_argument);
}

TEST_CASE("pair shell table: interpolation error and vanishing M shell") {
    const PairShellTable table(2.0 + 1e-7, 100.0, 96, 10);
    for (double r : {2.7, 5.3, 17.0, 63.0}) {
        ViscTensor f, j, m;
        struct Access {
            static void direct(double rr, int order, ViscTensor& f2, ViscTensor& j2, ViscTensor& m2) {
                const SphereQuadrature sq = sphere_quadrature(order);
                f2 = ViscTensor::zero();
                j2 = ViscTensor::zero();
                m2 = ViscTensor::zero();
                for (std::size_t k = 0; k < sq.size(); ++k) {
                    const Vec3 x = sq.nodes[k] * rr;
                    const ViscTensor a = m0_kernel_ball_avg(x);
                    const ViscTensor p = solve_i_minus(a, a);
                    const ViscTensor m3 = m0_kernel_deg3(x);
                    const double w = sq.weights[k] * 20.0 * kPi / 3.0;
                    f2 += w * p;
                    j2 += w * (p - m3);
                    m2 += w * m3;
                }
            }
        };
        Access::direct(r, 10, f, j, m);
        CHECK(table.full(r).max_abs_diff(f) < 1e-4 * std::max(1e-6, f.max_abs()) + 1e-9);
        CHECK(m.max_abs() < 1e-11);              // zero annulus mean per shell
        CHECK(table.m_shell(r).max_abs() < 1e-9);
        // J kernel equals the full kernel shellwise (the M part integrates to zero)
        CHECK(table.deg3_sub(r).max_abs_diff(table.full(r)) < 1e-9);
    }
}

TEST_CASE("pair shell table text cache round trip") {
    const PairShellTable table(2.0 + 1e-7, 30.0, 24, 6);
    std::stringstream ss;
    table.save(ss);
    const PairShellTable back = PairShellTable::load(ss);
    CHECK(back.nodes() == table.nodes());
    for (double r : {2.6, 7.0, 25.0})
        CHECK(back.full(r).max_abs_diff(table.full(r)) < 1e-14);
}

TEST_CASE("ball-pair shape term vanishes (principal-value diagnostic)") {
    const ViscTensor shape = ball_pair_shape_term(16, 32, 24, 8);
    CHECK(shape.max_abs() < 5e-4);
}

TEST_CASE("nu2: mean-field functional equals (5/2) Id for radial g2") {
    Mu2Params params;
    params.n = 1e6;
    params.radial_nodes = 128;
    params.sphere_order = 10;
    const Mu2Result nu2 = nu2_evaluate(hardcore_uniform_g2, params);
    CHECK(nu2.cavity_constant == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(nu2.shape_term_max_abs < 5e-4);
    CHECK(nu2.chi0_term_max_abs < 1e-10);
    // correlation part restricted to the degree -3 kernel vanishes shellwise
    CHECK(nu2.correlation.max_abs() < 1e-6);
    const ViscTensor expect = 2.5 * ViscTensor::identity();
    CHECK(nu2.value.max_abs_diff(expect) < 0.05 * 2.5);
}

TEST_CASE("mu2: breakdown additivity, symmetry, quadratic-form consistency") {
    Mu2Params params;
    params.n = 1e6;
    params.radial_nodes = 128;
    params.sphere_order = 10;
    const Mu2Result res = mu2_evaluate(hardcore_uniform_g2, params);

    const ViscTensor recomposed = res.mean_field + res.near_field + res.correlation;
    CHECK(res.value.max_abs_diff(recomposed) < 1e-14);

    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(std::abs(res.value(i, j) - res.value(j, i)) < 1e-6);

    // near-field difference mu2 - nu2 is finite and small against the mean field
    const Mu2Result nu2 = nu2_evaluate(hardcore_uniform_g2, params);
    const double diff = res.value.max_abs_diff(nu2.value);
    CHECK(std::isfinite(diff));
    CHECK(diff < 1.0);
    MESSAGE("mu2 - nu2 near-field difference (max entry) = ", diff);

    // isotropy: the quadratic form is rotation invariant for radial g2
    RngStream rng(64, 0);
    for (int t = 0; t < 5; ++t) {
        const StrainTensor s = random_unit_strain(rng);
        const Mat3 r = rotation(random_unit(rng), 2.0 * kPi * rng.next_double());
        const double v1 = visc_quad(res.value, s);
        const double v2 = visc_quad(res.value, rotate(s, r));
        CHECK(std::abs(v1 - v2) < 0.01 * std::abs(v1));
    }

    // the assembled matrix contracted with S matches the scalar pair kernel route
    const StrainTensor s = random_unit_strain(rng);
    const Vec3 z{0, 3.1, 0.4};
    const ViscTensor p = [&] {
        const ViscTensor a = m0_kernel_ball_avg(z);
        return solve_i_minus(a, a);
    }();
    CHECK(visc_quad(p, s) * 20.0 * kPi / 3.0 ==
          doctest::Approx(pair_functional_dipole({0, 0, 0}, -z, s, s)).epsilon(1e-10));
}

TEST_CASE("mu2 matrix contracts like the directly integrated scalar functional") {
    // assemble mu2 as a 5x5, then recompute the quadratic form for random S by
    // integrating the scalar pair functional over the same window
    Mu2Params params;
    params.n = 1e4;
    params.radial_nodes = 128;
    params.sphere_order = 10;
    const Mu2Result res = mu2_evaluate(hardcore_uniform_g2, params);

    const double big_r = std::cbrt(params.n);
    const Cutoff chi = chi0(params.r0);
    const SphereQuadrature sq = sphere_quadrature(10);
    const GaussLegendre gl = gauss_legendre(160);
    const double c_rho = 3.0 / (4.0 * kPi);

    RngStream rng(66, 0);
    for (int t = 0; t < 3; ++t) {
        const StrainTensor s = random_unit_strain(rng);
        // J + K parts: (1/2) c^2 int r^2 chi w_N [ (I_d - far) + I_d (g2 - 1) ]
        const double ulo = std::log(2.0 + 1e-7), uhi = std::log(2.0 * big_r);
        double acc = 0.0;
        for (int i = 0; i < 160; ++i) {
            const double u = ulo + (uhi - ulo) * 0.5 * (gl.nodes[i] + 1.0);
            const double w = (uhi - ulo) * 0.5 * gl.weights[i];
            const double r = std::exp(u);
            const double t_ov = r / big_r;
            const double w_n = t_ov >= 2.0 ? 0.0 : 1.0 - 0.75 * t_ov + t_ov * t_ov * t_ov / 16.0;
            if (w_n == 0.0 || chi(r) == 0.0) continue;
            double shell = 0.0;
            for (std::size_t q = 0; q < sq.size(); ++q) {
                const Vec3 z = sq.nodes[q] * r;
                const double full = pair_functional_dipole({0, 0, 0}, z, s, s);
                const double far3 =
                    20.0 * kPi / 3.0 * m0_deg3_apply(z, s).contract(s);
                const double g2 = hardcore_uniform_g2(r);
                shell += sq.weights[q] * ((full - far3) + full * (g2 - 1.0));
            }
            acc += w * r * r * r * chi(r) * w_n * shell;
        }
        const double scalar = 2.5 + 0.5 * c_rho * c_rho * acc;  // cavity + J + K
        const double matrix = visc_quad(res.value, s);
        CHECK(matrix == doctest::Approx(scalar).epsilon(5e-3));
    }
}

TEST_CASE("mu2: stability when doubling N") {
    Mu2Params params;
    params.radial_nodes = 128;
    params.sphere_order = 10;
    params.n = 1e5;
    const Mu2Result a = mu2_evaluate(hardcore_uniform_g2, params);
    params.n = 2e5;
    const Mu2Result b = mu2_evaluate(hardcore_uniform_g2, params);
    const double scale = std::max(a.value.max_abs(), b.value.max_abs());
    for (int i = 0; i < 25; ++i)
        CHECK(std::abs(a.value.a[i] - b.value.a[i]) <
              0.02 * std::max(std::abs(a.value.a[i]), scale));
}

TEST_CASE("mu2 from a binned estimate tracks the analytic radial g2") {
    // synthetic bins carrying the analytic Matern-I pair correlation
    const double r0 = 2.5, lambda = 0.01;
    CorrelationEstimate est;
    // bin edges aligned with the hardcore jump at r0 (a straddling bin would smear
    // the discontinuity and bias the correlation part)
    for (int k = 0; k <= 60; ++k) est.bin_edges.push_back(2.0 + 0.1 * k);
    for (int k = 0; k < 60; ++k) {
        const double c = est.bin_center(k);
        est.g2.push_back(matern1_pair_correlation(c, lambda, r0));
        est.g2_stderr.push_back(1e-4);
        est.pair_counts.push_back(1000);
    }
    est.ensemble_size = 1;
    est.intensity = matern1_retained_intensity(lambda, r0);
    est.hardcore_r0 = r0;

    Mu2Params params;
    params.n = 1e5;
    params.radial_nodes = 96;
    params.sphere_order = 8;
    const Mu2Result binned = mu2_evaluate(est, params);
    const Mu2Result analytic =
        mu2_evaluate([&](double r) { return matern1_pair_correlation(r, lambda, r0); }, params);
    CHECK(binned.value.max_abs_diff(analytic.value) < 0.02);
    CHECK(binned.mc_error >= 0.0);

    // stratified MC option agrees within its own reported noise
    params.use_mc = true;
    params.mc_samples_per_bin = 256;
    const Mu2Result mc = mu2_evaluate(est, params);
    CHECK(mc.mc_error > 0.0);
    CHECK(mc.value.max_abs_diff(binned.value) < std::max(0.05, 5.0 * mc.mc_error));

    // hardcore precondition
    CorrelationEstimate bad = est;
    bad.hardcore_r0 = 0.0;
    CHECK_THROWS_AS(mu2_evaluate(bad, params), std::invalid_argument);
}

TEST_CASE("cluster expansion: single sphere and exact two-sphere reduction") {
    RngStream rng(65, 0);
    const StrainTensor s = random_unit_strain(rng);

    PointConfiguration single;
    single.domain = Domain::ball(10.0);
    single.hardcore_r0 = 2.5;
    single.centers = {{1, 2, 3}};
    const ClusterExpansion c1 = cluster_expansion_build(single, s);
    CHECK(c1.ok);
    CHECK((c1.flow.responses[0].dipole - s).norm() == 0.0);

    PointConfiguration pair;
    pair.domain = Domain::ball(20.0);
    pair.hardcore_r0 = 2.5;
    pair.centers = {{0, 0, 0}, {5, 0, 0}};
    const ClusterExpansion c2 = cluster_expansion_build(pair, s);
    const TwoSphereSolution sol = two_sphere_solve(pair.centers[0], pair.centers[1], s);
    CHECK((c2.flow.responses[0].dipole - sol.dipole_y).norm() < 1e-10);
    CHECK((c2.flow.responses[1].dipole - sol.dipole_z).norm() < 1e-10);

    // residual proxy vanishes for configurations of at most two spheres
    const BallQuadrature ball = ball_quadrature(2, 5);
    const ResidualProxies p1 = residual_proxies(single, c1, s, ball);
    CHECK(p1.uerr == 0.0);
    const ResidualProxies p2 = residual_proxies(pair, c2, s, ball);
    CHECK(p2.uerr < 1e-28);

    // overlapping pair is flagged
    PointConfiguration badc;
    badc.domain = Domain::ball(10.0);
    badc.centers = {{0, 0, 0}, {1.5, 0, 0}};
    const ClusterExpansion cb = cluster_expansion_build(badc, s);
    CHECK_FALSE(cb.ok);
    REQUIRE(cb.flagged_pairs.size() == 1);
}

TEST_CASE("cluster triple: residual matches the N-body triplet scale") {
    const StrainTensor s = strain_basis()[1];
    std::vector<double> seps{8, 12, 18, 27}, cluster_res, nbody_diff;
    for (double d : seps) {
        PointConfiguration c;
        c.domain = Domain::ball(200.0);
        c.hardcore_r0 = 2.5;
        c.centers = {{-d, 0, 0}, {0, 0, 0}, {d, 0, 0}};
        const ClusterExpansion cl = cluster_expansion_build(c, s);
        const auto residuals = cluster_boundary_residuals(c, cl);
        cluster_res.push_back(*std::max_element(residuals.begin(), residuals.end()));

        const NBodySolution nb = nbody_dipole_solve(c.centers, s, 400, 1e-14);
        CHECK(nb.converged);
        double diff = 0;
        for (std::size_t k = 0; k < 3; ++k)
            diff = std::max(diff, (nb.dipoles[k] - cl.flow.responses[k].dipole).norm());
        nbody_diff.push_back(diff);
    }
    // triplet scale d^-6
    CHECK(loglog_slope(seps, cluster_res) == doctest::Approx(-6.0).epsilon(1.0 / 6.0));
    // the cluster self-consistency residual tracks the N-body correction
    for (std::size_t i = 0; i < seps.size(); ++i) {
        CHECK(cluster_res[i] / nbody_diff[i] > 0.3);
        CHECK(cluster_res[i] / nbody_diff[i] < 3.0);
    }
}

TEST_CASE("residual scaling slopes (reduced-size smoke)") {
    ResidualScalingParams params;
    params.target_spheres = 60;
    params.ensemble = 8;
    params.seed = 4242;
    const StrainTensor s = strain_basis()[0];
    const ResidualScalingReport rep = residual_diagnostics({0.01, 0.02, 0.04}, s, params);
    CHECK(rep.uerr_slope == doctest::Approx(3.0).epsilon(0.8 / 3.0));
    CHECK(rep.phisum_slope == doctest::Approx(2.0).epsilon(0.8 / 2.0));
}

TEST_CASE("finite-N viscosity: empty and single-sphere values") {
    const StrainTensor s = strain_basis()[2];
    PointConfiguration empty;
    empty.domain = Domain::ball(10.0);
    const FiniteNViscosity v0 = finite_n_viscosity(empty, s);
    CHECK(v0.value == doctest::Approx(s.norm2()).epsilon(1e-14));

    PointConfiguration single;
    single.domain = Domain::ball(10.0);  // N = 1000
    single.centers = {{2, -1, 3}};
    const FiniteNViscosity v1 = finite_n_viscosity(single, s);
    CHECK(v1.interior_spheres == 1);
    CHECK(v1.value == doctest::Approx(s.norm2() * (1.0 + 2.5 / 1000.0)).epsilon(1e-9));

    // quadrature and analytic functional paths agree
    PointConfiguration two;
    two.domain = Domain::ball(12.0);
    two.centers = {{-2, 0, 0}, {2.5, 1, 0}};
    FiniteNParams fp;
    fp.by_quadrature = true;
    const FiniteNViscosity vq = finite_n_viscosity(two, s, fp);
    fp.by_quadrature = false;
    const FiniteNViscosity va = finite_n_viscosity(two, s, fp);
    CHECK(vq.value == doctest::Approx(va.value).epsilon(1e-10));
    // sphere sticking out of the domain is excluded from the functional
    PointConfiguration edge;
    edge.domain = Domain::ball(10.0);
    edge.centers = {{9.5, 0, 0}};
    CHECK(finite_n_viscosity(edge, s).interior_spheres == 0);
}

TEST_CASE("einstein trend smoke: slope near (5/2)|S|^2, mean above the pure-fluid floor") {
    EinsteinTrendParams params;
    params.n_domain = 27000;  // L = 30
    params.ensemble = 6;
    params.seed = 515;
    const StrainTensor s = strain_basis()[0];
    const EinsteinTrendReport rep = einstein_trend({0.01, 0.02}, s, params);
    CHECK(rep.slope > 1.5);
    CHECK(rep.slope < 3.5);
    // energy positivity of the exact problem: the mean stays above |S|^2 within
    // 2 stderr at every phi
    for (std::size_t i = 0; i < rep.phis.size(); ++i)
        CHECK(rep.mean_visc[i] >= rep.s_norm2 - 2.0 * rep.stderr_visc[i]);
    CHECK_THROWS_AS(einstein_trend({0.01}, s, params), std::invalid_argument);
}

TEST_CASE("residual diagnostics rejects degenerate phi grids") {
    ResidualScalingParams params;
    params.ensemble = 2;
    CHECK_THROWS_AS(residual_diagnostics({0.01, 0.02}, strain_basis()[0], params),
                    std::invalid_argument);
}

TEST_CASE("mu2 convergence flag reflects the radial quadrature error") {
    Mu2Params params;
    params.n = 1e5;
    params.radial_nodes = 96;
    params.sphere_order = 8;
    const Mu2Result res = mu2_evaluate(hardcore_uniform_g2, params);
    CHECK(res.converged);
    CHECK(res.quad_error < params.rel_tol * res.value.max_abs());
}
