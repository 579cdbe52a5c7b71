// Acceptance suite: one pass/fail line per criterion, each with its tolerance
// pinned in code. Exit status is the number of failed criteria.
//
// Criterion 4 carries a known-red sub-check: the measured decay of
// ||M_l - M0|| is d^-5 (the ball-average correction equals the degree -5 part of
// the kernel exactly, and the reflection series contributes d^-6 next), so the
// asserted log-log slope window -4 +- 0.3 cannot be met by any faithful
// implementation. The upper bound ||M_l - M0|| <= C d^-4 is verified alongside.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "susp/effective_viscosity.hpp"
#include "susp/single_sphere.hpp"

using namespace susp;

namespace {

constexpr double kPi = std::numbers::pi;

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s  |  %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

StrainTensor random_strain(RngStream& rng) {
    Mat3 m;
    for (int i = 0; i < 9; ++i) m.a[i] = 2.0 * rng.next_double() - 1.0;
    return sym_trace_free_project(m);
}

Vec3 random_unit(RngStream& rng) {
    for (;;) {
        const Vec3 v{2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0,
                     2.0 * rng.next_double() - 1.0};
        const double n = v.norm();
        if (n > 1e-3 && n <= 1.0) return v / n;
    }
}

// 1. sigma(Phi0,P0) n = 3 S x, max componentwise error < 1e-10 over 10^3 unit
//    points x 20 strains, in under a second.
void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    RngStream rng(101, 0);
    double worst = 0.0;
    for (int s_idx = 0; s_idx < 20; ++s_idx) {
        const StrainTensor s = random_strain(rng);
        for (int p = 0; p < 1000; ++p) {
            const Vec3 x = random_unit(rng);
            const Vec3 lhs = boundary_stress_from_derivatives(x, s);
            const Vec3 rhs = s.apply(x) * 3.0;
            for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(lhs[c] - rhs[c]));
        }
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(1, "boundary stress sigma n = 3Sx", worst < 1e-10 && sec < 1.0,
           "max err " + fmt(worst) + " (< 1e-10), runtime " + fmt(sec) + " s (< 1)");
}

// 2. functional / |S|^2 = 20 pi / 3 within 1e-6 at order >= 20; Einstein 5/2 within 1e-8.
void criterion_2() {
    const SphereQuadrature quad = sphere_quadrature(20);
    RngStream rng(102, 0);
    double worst_f = 0.0;
    for (int t = 0; t < 5; ++t) {
        const StrainTensor s = random_strain(rng);
        worst_f = std::max(worst_f, std::abs(single_sphere_functional(s, quad) / s.norm2() -
                                             20.0 * kPi / 3.0));
    }
    const double ein = std::abs(einstein_coefficient() - 2.5);
    report(2, "surface functional 20pi/3 and Einstein 5/2", worst_f < 1e-6 && ein < 1e-8,
           "functional err " + fmt(worst_f) + " (< 1e-6), Einstein err " + fmt(ein) + " (< 1e-8)");
}

// 3. kernel vs finite differences < 1e-6 relative at 100 points; zero annulus mean
//    of the degree -3 part within 1e-10 per shell.
void criterion_3() {
    RngStream rng(103, 0);
    double worst_fd = 0.0;
    int tested = 0;
    while (tested < 100) {
        Vec3 x{2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0,
               2.0 * rng.next_double() - 1.0};
        if (x.norm() < 1e-2) continue;
        x = x * ((1.5 + 48.5 * rng.next_double()) / x.norm());
        StrainTensor s = random_strain(rng);
        s = s * (1.0 / s.norm());
        const StrainTensor exact = m0_apply(x, s);
        Mat3 g;
        const double h = 1e-5;
        for (int j = 0; j < 3; ++j) {
            Vec3 dx;
            dx[j] = h;
            const Vec3 up = phi0_velocity(x + dx, s), dn = phi0_velocity(x - dx, s);
            for (int i = 0; i < 3; ++i) g(i, j) = (up[i] - dn[i]) / (2.0 * h);
        }
        const StrainTensor fd = sym_trace_free_project(g);
        worst_fd = std::max(worst_fd, (exact - fd).norm() / exact.norm());
        ++tested;
    }

    const SphereQuadrature shell = sphere_quadrature(12);
    double worst_shell = 0.0;
    for (double r : {0.3, 1.0, 3.7, 12.0, 80.0}) {
        const StrainTensor s = random_strain(rng);
        StrainTensor acc;
        for (std::size_t k = 0; k < shell.size(); ++k)
            acc += m0_deg3_apply(shell.nodes[k] * r, s) * shell.weights[k];
        worst_shell = std::max(worst_shell, acc.norm() / s.norm());
    }
    report(3, "kernel consistency and zero annulus mean", worst_fd < 1e-6 && worst_shell < 1e-10,
           "FD rel err " + fmt(worst_fd) + " (< 1e-6), shell mean " + fmt(worst_shell) +
               " (< 1e-10)");
}

// 4. two-sphere symmetry identities within solver tolerance; log-log slope of
//    ||M_l - M0|| over [10, 100] equal to -4 +- 0.3; geometric contraction at
//    separation >= 3. The slope window cannot be met by a faithful implementation
//    (the exact decay is d^-5); the bound ||M_l - M0|| <= C d^-4, which is the
//    statement that actually holds, is verified alongside.
void criterion_4() {
    RngStream rng(104, 0);
    const double solver_tol = 1e-9;

    bool sym_ok = true;
    for (int t = 0; t < 5; ++t) {
        StrainTensor s = random_strain(rng);
        const Vec3 y{0.4, -0.7, 0.2}, z{2.9, 1.8, -1.4};
        const TwoSphereSolution a = two_sphere_solve(y, z, s);
        const TwoSphereSolution b = two_sphere_solve(z, y, s);
        const TwoSphereSolution c = two_sphere_solve(-y, -z, s);
        sym_ok = sym_ok && a.converged && (a.dipole_y - b.dipole_z).norm() < solver_tol &&
                 (a.dipole_z - b.dipole_y).norm() < solver_tol;
        for (int q = 0; q < 5; ++q) {
            Vec3 x{8.0 * (2.0 * rng.next_double() - 1.0), 8.0 * (2.0 * rng.next_double() - 1.0),
                   8.0 * (2.0 * rng.next_double() - 1.0)};
            if ((x - y).norm() < 1.2 || (x - z).norm() < 1.2) continue;
            sym_ok = sym_ok && (psi_strain(a, x) - psi_strain(b, x)).norm() < solver_tol &&
                     (psi_strain(a, x) - psi_strain(c, x * (-1.0))).norm() < solver_tol;
        }
    }

    std::vector<double> seps, diffs;
    for (double d = 10.0; d <= 100.0 + 1e-9; d *= std::pow(10.0, 0.25)) seps.push_back(d);
    bool bound_ok = true;
    double prev_scaled = -1.0;
    for (double d : seps) {
        const Vec3 dd{0, 0, d};
        const double diff = (far_field_tensor(dd) - m0_kernel(dd)).frobenius_norm();
        diffs.push_back(diff);
        const double scaled = diff * d * d * d * d;  // must stay bounded
        if (prev_scaled >= 0.0 && scaled > prev_scaled * 1.05) bound_ok = false;
        prev_scaled = scaled;
    }
    const double slope = loglog_slope(seps, diffs);
    const bool slope_ok = std::abs(slope - (-4.0)) <= 0.3;

    bool contraction_ok = true;
    std::string ratios;
    for (double d : {3.0, 5.0, 10.0}) {
        const TwoSphereSolution sol = two_sphere_solve({0, 0, 0}, {d, 0, 0}, strain_basis()[1]);
        contraction_ok = contraction_ok && sol.converged && sol.contraction_ratio < 1.0;
        ratios += fmt(sol.contraction_ratio) + " ";
    }

    report(4, "two-sphere symmetry and far field", sym_ok && slope_ok && contraction_ok,
           std::string("symmetry ") + (sym_ok ? "ok" : "BROKEN") + "; slope " + fmt(slope) +
               " (target window -4 +- 0.3" +
               (slope_ok ? "" : "; expected red, true decay is d^-5") +
               "); upper bound d^4 ||M_l - M0|| bounded: " + (bound_ok ? "yes" : "NO") +
               "; contraction ratios " + ratios + "(all < 1)");
}

// 5. cluster expansion exact through pairs; triple residual at the N-body triplet scale.
void criterion_5() {
    const StrainTensor s = strain_basis()[0];
    const BallQuadrature ball = ball_quadrature(2, 5);

    PointConfiguration two;
    two.domain = Domain::ball(50.0);
    two.hardcore_r0 = 2.5;
    two.centers = {{-3, 0, 0}, {3, 0.5, 0}};
    const ClusterExpansion c2 = cluster_expansion_build(two, s);
    const double pair_residual = residual_proxies(two, c2, s, ball).uerr;

    RngStream rng(105, 0);
    bool triple_ok = true;
    std::string ratios;
    int done = 0;
    while (done < 5) {
        PointConfiguration tri;
        tri.domain = Domain::ball(100.0);
        tri.hardcore_r0 = 2.5;
        const Vec3 a{0, 0, 0};
        const Vec3 b = random_unit(rng) * 10.0;
        Vec3 c = random_unit(rng) * 10.0;
        if ((b - c).norm() < 6.0) c = c * (-1.0);
        if ((b - c).norm() < 6.0) continue;
        tri.centers = {a, b, c};
        const ClusterExpansion cl = cluster_expansion_build(tri, s);
        const auto res = cluster_boundary_residuals(tri, cl);
        const NBodySolution nb = nbody_dipole_solve(tri.centers, s, 400, 1e-14);
        double nb_diff = 0.0, cl_res = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            nb_diff = std::max(nb_diff, (nb.dipoles[k] - cl.flow.responses[k].dipole).norm());
            cl_res = std::max(cl_res, res[k]);
        }
        const double ratio = cl_res / nb_diff;
        ratios += fmt(ratio) + " ";
        triple_ok = triple_ok && ratio > 0.25 && ratio < 4.0;
        ++done;
    }

    report(5, "cluster expansion exactness", pair_residual < 1e-10 && triple_ok,
           "pair residual " + fmt(pair_residual) +
               " (< 1e-10); triple residual / N-body oracle: " + ratios);
}

// 6. Matern-I hardcore and intensity; hardcore g2 zero below r0; Poisson g2 flat.
void criterion_6() {
    const double r0 = 2.5, lambda = 0.005;
    const Domain dom = Domain::ball(20.0);
    bool hardcore_ok = true;
    double retained = 0.0;
    const int trials = 500;
    std::vector<PointConfiguration> matern_ensemble;
    for (int t = 0; t < trials; ++t) {
        PointConfiguration config = matern1_sample(lambda, dom, r0, 106, t);
        hardcore_ok = hardcore_ok && check_h1(config, r0).ok;
        retained += static_cast<double>(config.centers.size());
        if (t < 200) matern_ensemble.push_back(std::move(config));
    }
    const double expect = matern1_retained_intensity(lambda, r0) * dom.volume();
    const double dev = std::abs(retained / trials - expect);
    const double sigma3 = 3.0 * std::sqrt(expect / trials);

    std::vector<double> edges;
    for (int k = 0; k <= 14; ++k) edges.push_back(0.5 * k + 0.5);
    const CorrelationEstimate mest = estimate_g2(matern_ensemble, edges);
    bool zero_below = true;
    for (std::size_t k = 0; k < mest.nbins(); ++k)
        if (mest.bin_edges[k + 1] <= r0 && mest.g2[k] != 0.0) zero_below = false;

    std::vector<PointConfiguration> poisson_ensemble;
    for (int t = 0; t < 150; ++t)
        poisson_ensemble.push_back(poisson_sample(0.08, Domain::ball(12.0), 107, t));
    const CorrelationEstimate pest = estimate_g2(poisson_ensemble, edges);
    bool poisson_flat = true;
    double worst_z = 0.0;
    for (std::size_t k = 0; k < pest.nbins(); ++k) {
        if (pest.g2_stderr[k] == 0.0) continue;
        const double z = std::abs(pest.g2[k] - 1.0) / pest.g2_stderr[k];
        worst_z = std::max(worst_z, z);
        poisson_flat = poisson_flat && z < 3.0;
    }

    report(6, "Matern-I and Poisson statistics",
           hardcore_ok && dev < sigma3 && zero_below && poisson_flat,
           "hardcore " + std::string(hardcore_ok ? "ok" : "VIOLATED") + "; intensity dev " +
               fmt(dev) + " (< 3 sigma = " + fmt(sigma3) + "); g2 zero below r0: " +
               (zero_below ? "yes" : "NO") + "; Poisson worst |z| " + fmt(worst_z) + " (< 3)");
}

// 7. mu2 stability under doubling N across a decade: entries move by < 2%
//    (relative where an entry is O(1); matrix-scale-relative for near-zero entries).
void criterion_7() {
    Mu2Params params;
    params.r0 = 2.5;
    params.radial_nodes = 192;
    params.sphere_order = 12;
    const auto g2 = [](double r) { return r < 2.5 ? 0.0 : 1.0; };

    std::vector<double> ns{1e5, 2e5, 4e5, 8e5, 1.6e6};
    std::vector<Mu2Result> results;
    for (double n : ns) {
        params.n = n;
        results.push_back(mu2_evaluate(g2, params));
    }
    bool stable = true;
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < results.size(); ++i) {
        const ViscTensor& a = results[i].value;
        const ViscTensor& b = results[i + 1].value;
        const double scale = std::max(a.max_abs(), b.max_abs());
        for (int e = 0; e < 25; ++e) {
            const double rel = std::abs(a.a[e] - b.a[e]) / std::max(std::abs(a.a[e]), scale);
            worst = std::max(worst, rel);
            stable = stable && rel < 0.02;
        }
    }
    report(7, "mu2 uniform-in-N stability (N from 1e5 to 1.6e6)", stable,
           "worst per-doubling entry change " + fmt(100.0 * worst) + "% (< 2%), mu2(0,0) = " +
               fmt(results.back().value(0, 0)));
}

// 8. mean-field Batchelor-Green: nu2 = (5/2)|S|^2 within 5% for radial g2
//    converging rapidly to 1; mu2 - nu2 reported and finite.
void criterion_8() {
    Mu2Params params;
    params.r0 = 2.5;
    params.n = 1e6;
    params.radial_nodes = 192;
    params.sphere_order = 12;
    // radial g2 with a fast (exponential) transient above the hardcore radius
    const auto g2 = [](double r) {
        return r < 2.5 ? 0.0 : 1.0 + 0.2 * std::exp(-2.0 * (r - 2.5));
    };
    const Mu2Result nu2 = nu2_evaluate(g2, params);
    const Mu2Result mu2 = mu2_evaluate(g2, params);

    RngStream rng(108, 0);
    bool ok = true;
    double worst_rel = 0.0;
    for (int t = 0; t < 10; ++t) {
        StrainTensor s = random_strain(rng);
        s = s * (1.0 / s.norm());
        const double val = visc_quad(nu2.value, s);
        const double rel = std::abs(val - 2.5) / 2.5;
        worst_rel = std::max(worst_rel, rel);
        ok = ok && rel < 0.05;
    }
    const double near_field_gap = mu2.value.max_abs_diff(nu2.value);
    ok = ok && std::isfinite(near_field_gap);
    report(8, "mean-field Batchelor-Green 5/2", ok,
           "worst |nu2 S:S - 5/2| / (5/2) = " + fmt(worst_rel) + " (< 0.05); mu2 - nu2 gap " +
               fmt(near_field_gap) + " (reported, finite)");
}

// 9. residual scaling: u_err slope 3 +- 0.5 and Phi-sum slope 2 +- 0.5 over
//    phi in {0.01, 0.02, 0.04}, ~200 spheres, ensemble 50.
void criterion_9() {
    ResidualScalingParams params;
    params.target_spheres = 200;
    params.ensemble = 50;
    params.r0 = 2.05;  // Matern-I intensity ceiling at r0 = 2.5 is phi ~ 0.0235
    params.seed = 109;
    const ResidualScalingReport rep =
        residual_diagnostics({0.01, 0.02, 0.04}, strain_basis()[0], params);
    const bool ok =
        std::abs(rep.uerr_slope - 3.0) <= 0.5 && std::abs(rep.phisum_slope - 2.0) <= 0.5;
    report(9, "residual scaling exponents", ok,
           "u_err slope " + fmt(rep.uerr_slope) + " (3 +- 0.5), Phi-sum slope " +
               fmt(rep.phisum_slope) + " (2 +- 0.5)");
}

// 10. finite-N Einstein trend: ensemble-mean viscosity slope within 10% of (5/2)|S|^2.
void criterion_10() {
    EinsteinTrendParams params;
    params.n_domain = 64000;
    params.ensemble = 60;
    params.seed = 110;
    const StrainTensor s = strain_basis()[0];
    const EinsteinTrendReport rep = einstein_trend({0.005, 0.01, 0.02}, s, params);
    const double slope = rep.slope / rep.s_norm2;
    const bool ok = std::abs(slope - 2.5) <= 0.25;
    report(10, "finite-N Einstein trend", ok,
           "slope " + fmt(slope) + " x |S|^2 (2.5 +- 0.25), stderr " +
               fmt(rep.slope_stderr / rep.s_norm2) + ", spheres at phi=0.02: " +
               fmt(rep.mean_spheres.back()));
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("---\n%d of 10 criteria passed in %.1f s\n", 10 - g_failures, sec);
    return g_failures;
}
