#include "susp/effective_viscosity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "susp/parallel.hpp"

namespace susp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFunctionalPrefactor = 20.0 * kPi / 3.0;
// rho1 = (3/4pi) phi; the pair integrals against the classical g2 carry rho1^2/phi^2.
constexpr double kRhoJacobian = (3.0 / (4.0 * kPi)) * (3.0 / (4.0 * kPi));
// Dirac mass of the distributional strain of the dipole field:
// D(Phi_M) = PV M - (4pi/3) Id delta_0. Its contribution to the mean-field term,
// (3/4pi)^2 (10pi/3)(4pi/3) = 5/2, is the local-field (Lorentz cavity)
// renormalization constant of the Batchelor-Green coefficient.
constexpr double kCavityDelta = 4.0 * kPi / 3.0;

ViscTensor pair_response_closed(const Vec3& d) {
    const ViscTensor a = m0_kernel_ball_avg(d);
    return solve_i_minus(a, a);
}

// Ball-overlap weight of the finite-N window: |B_R cap (B_R - z)| / |B_R|.
double overlap_weight(double r, double big_r) {
    if (r >= 2.0 * big_r) return 0.0;
    const double t = r / big_r;
    return 1.0 - 0.75 * t + t * t * t / 16.0;
}

Mat3 frame_of(const Vec3& axis) {
    const Vec3 n = axis / axis.norm();
    Vec3 a = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 u = cross(n, a);
    u = u / u.norm();
    const Vec3 v = cross(n, u);
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        r(i, 0) = u[i];
        r(i, 1) = v[i];
        r(i, 2) = n[i];
    }
    return r;
}

void write_double(std::ostream& os, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
}

void write_matrix(std::ostream& os, const char* tag, const ViscTensor& t) {
    os << tag;
    for (int i = 0; i < 25; ++i) {
        os << (i % 5 == 0 ? "\n" : " ");
        write_double(os, t.a[i]);
    }
    os << "\n";
}

ViscTensor read_matrix(std::istream& is, const std::string& expected_tag) {
    std::string tag;
    is >> tag;
    if (tag != expected_tag) throw std::runtime_error("pair table: expected block " + expected_tag);
    ViscTensor t;
    for (int i = 0; i < 25; ++i) is >> t.a[i];
    return t;
}

}  // namespace

PairFunctionalResult pair_functional(const Vec3& y, const Vec3& z, const StrainTensor& s,
                                     const StrainTensor& s_test, double radius, int quad_order,
                                     double r0, const TwoSphereSolveParams& params) {
    if ((y - z).norm() <= 2.0) throw std::invalid_argument("pair_functional: spheres overlap");
    if (radius <= 0.0) radius = 0.5 * ((2.0 + r0) / 4.0 + r0 / 2.0);
    const TwoSphereSolution sol = two_sphere_solve(y, z, s, params);
    PairFunctionalResult out;
    out.converged = sol.converged;
    out.reduced_accuracy = sol.reduced_accuracy;
    if (!sol.converged) return out;
    const SphereQuadrature quad = sphere_quadrature(quad_order);
    out.value = surface_functional(sol.psi_field(), y, radius, s_test, quad);
    return out;
}

double pair_functional_far(const Vec3& y, const Vec3& z, const StrainTensor& s,
                           const StrainTensor& s_test) {
    return kFunctionalPrefactor * m0_apply(y - z, s).contract(s_test);
}

double pair_functional_dipole(const Vec3& y, const Vec3& z, const StrainTensor& s,
                              const StrainTensor& s_test) {
    const ViscTensor p = pair_response_closed(y - z);
    return kFunctionalPrefactor * visc_apply(p, s).contract(s_test);
}

// ---------------------------------------------------------------------------
// PairShellTable
// ---------------------------------------------------------------------------

void PairShellTable::shell_matrices(double r, int sphere_order, ViscTensor& full,
                                    ViscTensor& deg3_sub, ViscTensor& m_shell) {
    const SphereQuadrature sq = sphere_quadrature(sphere_order);
    full = ViscTensor::zero();
    deg3_sub = ViscTensor::zero();
    m_shell = ViscTensor::zero();
    for (std::size_t k = 0; k < sq.size(); ++k) {
        const Vec3 x = sq.nodes[k] * r;
        const ViscTensor p = pair_response_closed(x);
        const ViscTensor m3 = m0_kernel_deg3(x);
        const double w = sq.weights[k] * kFunctionalPrefactor;
        full += w * p;
        deg3_sub += w * (p - m3);
        m_shell += w * m3;
    }
}

PairShellTable::PairShellTable(double r_min, double r_max, int nodes, int sphere_order) {
    if (!(r_min > 2.0) || !(r_max > r_min) || nodes < 8)
        throw std::invalid_argument("PairShellTable: bad grid");
    r_min_ = r_min;
    r_max_ = r_max;
    sphere_order_ = sphere_order;
    u0_ = std::log(r_min);
    du_ = (std::log(r_max) - u0_) / (nodes - 1);
    full_.resize(nodes);
    deg3_sub_.resize(nodes);
    m_shell_.resize(nodes);
    ml_axis_.resize(nodes);
    for (int i = 0; i < nodes; ++i) {
        const double r = std::exp(u0_ + i * du_);
        shell_matrices(r, sphere_order, full_[i], deg3_sub_[i], m_shell_[i]);
        ml_axis_[i] = pair_response_closed(Vec3{0, 0, r});
    }
}

ViscTensor PairShellTable::interp(const std::vector<ViscTensor>& v, double r) const {
    const double u = std::log(r);
    const int n = static_cast<int>(v.size());
    double t = (u - u0_) / du_;
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 0, n - 2);
    t -= i;
    const int im = std::max(i - 1, 0), ip = std::min(i + 2, n - 1);
    // Catmull-Rom on the uniform log grid
    const double w0 = 0.5 * (-t * t * t + 2 * t * t - t);
    const double w1 = 0.5 * (3 * t * t * t - 5 * t * t + 2);
    const double w2 = 0.5 * (-3 * t * t * t + 4 * t * t + t);
    const double w3 = 0.5 * (t * t * t - t * t);
    return w0 * v[im] + w1 * v[i] + w2 * v[i + 1] + w3 * v[ip];
}

ViscTensor PairShellTable::full(double r) const {
    if (r < r_min_ || r > r_max_) {  // direct solve off the grid
        ViscTensor f, j, m;
        shell_matrices(r, sphere_order_, f, j, m);
        return f;
    }
    return interp(full_, r);
}

ViscTensor PairShellTable::deg3_sub(double r) const {
    if (r < r_min_ || r > r_max_) {
        ViscTensor f, j, m;
        shell_matrices(r, sphere_order_, f, j, m);
        return j;
    }
    return interp(deg3_sub_, r);
}

ViscTensor PairShellTable::m_shell(double r) const {
    if (r < r_min_ || r > r_max_) {
        ViscTensor f, j, m;
        shell_matrices(r, sphere_order_, f, j, m);
        return m;
    }
    return interp(m_shell_, r);
}

void PairShellTable::save(std::ostream& os) const {
    os << "# suspvisc pair table v1\n";
    os << "grid ";
    write_double(os, r_min_);
    os << " ";
    write_double(os, r_max_);
    os << " " << nodes() << " " << sphere_order_ << "\n";
    for (int i = 0; i < nodes(); ++i) {
        os << "r ";
        write_double(os, std::exp(u0_ + i * du_));
        os << "\n";
        write_matrix(os, "ml_axis", ml_axis_[i]);
        write_matrix(os, "shell_full", full_[i]);
        write_matrix(os, "shell_j", deg3_sub_[i]);
        write_matrix(os, "shell_m", m_shell_[i]);
    }
}

PairShellTable PairShellTable::load(std::istream& is) {
    std::string line;
    std::getline(is, line);  // comment header
    std::string tag;
    is >> tag;
    if (tag != "grid") throw std::runtime_error("pair table: missing grid header");
    PairShellTable t;
    int nodes = 0;
    is >> t.r_min_ >> t.r_max_ >> nodes >> t.sphere_order_;
    if (nodes < 2) throw std::runtime_error("pair table: bad node count");
    t.u0_ = std::log(t.r_min_);
    t.du_ = (std::log(t.r_max_) - t.u0_) / (nodes - 1);
    t.full_.resize(nodes);
    t.deg3_sub_.resize(nodes);
    t.m_shell_.resize(nodes);
    t.ml_axis_.resize(nodes);
    for (int i = 0; i < nodes; ++i) {
        double r;
        is >> tag >> r;
        if (tag != "r") throw std::runtime_error("pair table: missing node radius");
        t.ml_axis_[i] = read_matrix(is, "ml_axis");
        t.full_[i] = read_matrix(is, "shell_full");
        t.deg3_sub_[i] = read_matrix(is, "shell_j");
        t.m_shell_[i] = read_matrix(is, "shell_m");
    }
    if (!is) throw std::runtime_error("pair table: truncated file");
    return t;
}

// ---------------------------------------------------------------------------
// Shape term
// ---------------------------------------------------------------------------

ViscTensor ball_pair_shape_term(int rho_nodes, int r_nodes, int cap_nodes, int axis_order) {
    const GaussLegendre gl_rho = gauss_legendre(rho_nodes);
    const GaussLegendre gl_r = gauss_legendre(r_nodes);
    const GaussLegendre gl_u = gauss_legendre(cap_nodes);
    const int n_az = 16;  // kernel entries have azimuthal trig degree <= 4
    const SphereQuadrature axis_quad = sphere_quadrature(axis_order);

    ViscTensor total = ViscTensor::zero();
    for (int a = 0; a < rho_nodes; ++a) {
        const double rho = 0.5 * (gl_rho.nodes[a] + 1.0);
        const double w_rho = 0.5 * gl_rho.weights[a];
        if (rho <= 0.0 || rho >= 1.0) continue;

        // PV int over the lens B(0,1) \ B(y, 1-rho) with axis e3: radial shells
        // (1-rho, 1+rho) contribute -1 times the cap {cos(alpha) > c*}, since the
        // complete shell integral of the degree -3 kernel vanishes.
        ViscTensor lens = ViscTensor::zero();
        for (int b = 0; b < r_nodes; ++b) {
            const double r = (1.0 - rho) + rho * (gl_r.nodes[b] + 1.0);
            const double w_r = rho * gl_r.weights[b] / r;  // dr / r
            const double cstar = (1.0 - rho * rho - r * r) / (2.0 * rho * r);
            if (cstar >= 1.0) continue;
            const double lo = std::max(cstar, -1.0);
            ViscTensor cap = ViscTensor::zero();
            for (int c = 0; c < cap_nodes; ++c) {
                const double u = lo + (1.0 - lo) * 0.5 * (gl_u.nodes[c] + 1.0);
                const double w_u = (1.0 - lo) * 0.5 * gl_u.weights[c];
                const double sn = std::sqrt(std::max(0.0, 1.0 - u * u));
                for (int p = 0; p < n_az; ++p) {
                    const double phi = 2.0 * kPi * (p + 0.5) / n_az;
                    const Vec3 w{sn * std::cos(phi), sn * std::sin(phi), u};
                    cap += (w_u * 2.0 * kPi / n_az) * m0_kernel_deg3(w);
                }
            }
            lens += (-w_r) * cap;
        }

        // isotropize over the direction of y
        ViscTensor avg = ViscTensor::zero();
        for (std::size_t q = 0; q < axis_quad.size(); ++q) {
            const Mat3 rot = frame_of(axis_quad.nodes[q]);
            avg += (axis_quad.weights[q] / (4.0 * kPi)) * rotate(lens, rot);
        }
        total += (3.0 * w_rho * rho * rho) * avg;
    }
    return total;
}

// ---------------------------------------------------------------------------
// mu2 / nu2
// ---------------------------------------------------------------------------

namespace {

struct MeanFieldPart {
    ViscTensor tensor;
    double cavity = 0.0;
    double shape_max = 0.0;
    double chi0_max = 0.0;
};

MeanFieldPart mean_field_part(const Mu2Params& params) {
    MeanFieldPart out;
    out.cavity = kRhoJacobian * (10.0 * kPi / 3.0) * kCavityDelta;  // = 5/2

    const ViscTensor shape = ball_pair_shape_term(params.shape_rho_nodes);
    out.shape_max = shape.max_abs();

    // (chi0 - 1) M correction: radial weight times the shell mean of M, zero per
    // shell; evaluated as the shell-mean matrix times the radial integral.
    const Cutoff chi = chi0(params.r0);
    const SphereQuadrature sq = sphere_quadrature(params.sphere_order);
    ViscTensor shell_mean = ViscTensor::zero();
    for (std::size_t k = 0; k < sq.size(); ++k) shell_mean += sq.weights[k] * m0_kernel_deg3(sq.nodes[k]);
    const GaussLegendre gl = gauss_legendre(32);
    double radial = 0.0;
    for (int i = 0; i < 32; ++i) {
        const double r = 0.5 * params.r0 * (gl.nodes[i] + 1.0);
        if (r <= 0.0) continue;
        radial += 0.5 * params.r0 * gl.weights[i] * (chi(r) - 1.0) / r;
    }
    const ViscTensor chi_term = radial * shell_mean;
    out.chi0_max = chi_term.max_abs();

    out.tensor = (kRhoJacobian * 10.0 * kPi / 3.0) *
                 (kCavityDelta * ViscTensor::identity() + shape + chi_term);
    return out;
}

struct RadialKernels {
    const PairShellTable* table = nullptr;
    bool mean_field_only = false;  // nu2: kernel restricted to the degree -3 composition
    ViscTensor j_kernel(double r) const {
        if (mean_field_only) return ViscTensor::zero();
        return table->deg3_sub(r);
    }
    ViscTensor k_kernel(double r) const {
        if (mean_field_only) return table->m_shell(r);
        return table->full(r);
    }
};

struct RadialIntegrals {
    ViscTensor j, k;
};

// Composite integral over [lo, hi] in log radius. Panels are aligned with the
// supplied knots (g2 bin edges, the hardcore radius) so that discontinuities of the
// integrand never sit inside a Gauss-Legendre panel.
RadialIntegrals radial_integrals(const RadialKernels& kernels, const Mu2Params& params,
                                 const std::function<double(double)>& g2,
                                 const std::vector<double>& knots, int points_per_panel) {
    const double big_r = std::cbrt(params.n);
    const double lo = kernels.table->r_min();
    const double hi = 2.0 * big_r;
    const Cutoff chi = chi0(params.r0);

    std::vector<double> breaks{lo};
    for (double k : knots)
        if (k > lo && k < hi) breaks.push_back(k);
    const int n_log = std::max(24, params.radial_nodes / 4);
    for (int i = 1; i <= n_log; ++i)
        breaks.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / n_log));
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12 * b; }),
                 breaks.end());

    const GaussLegendre gl = gauss_legendre(points_per_panel);
    RadialIntegrals out;
    out.j = ViscTensor::zero();
    out.k = ViscTensor::zero();
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double ua = std::log(breaks[p]), ub = std::log(breaks[p + 1]);
        for (int i = 0; i < points_per_panel; ++i) {
            const double u = ua + (ub - ua) * 0.5 * (gl.nodes[i] + 1.0);
            const double w = (ub - ua) * 0.5 * gl.weights[i];
            const double r = std::exp(u);
            const double base = w * r * r * r * chi(r) * overlap_weight(r, big_r);
            if (base == 0.0) continue;
            out.j += base * kernels.j_kernel(r);
            out.k += (base * (g2(r) - 1.0)) * kernels.k_kernel(r);
        }
    }
    const double half = 0.5 * kRhoJacobian;
    out.j = half * out.j;
    out.k = half * out.k;
    return out;
}

Mu2Result evaluate_impl(const std::function<double(double)>& g2, const Mu2Params& params,
                        bool mean_field_only, const std::vector<double>& knots) {
    if (!(params.r0 > 2.0)) throw std::invalid_argument("mu2: r0 > 2 required");
    const double big_r = std::cbrt(params.n);
    if (!(big_r > params.r0)) throw std::invalid_argument("mu2: N too small for the window");

    Mu2Result res;
    res.n_used = params.n;

    const MeanFieldPart mf = mean_field_part(params);
    res.mean_field = mf.tensor;
    res.cavity_constant = mf.cavity;
    res.shape_term_max_abs = mf.shape_max;
    res.chi0_term_max_abs = mf.chi0_max;

    PairShellTable table(2.0 + 1e-7, 2.0 * big_r, params.radial_nodes, params.sphere_order);
    RadialKernels kernels{&table, mean_field_only};

    const RadialIntegrals fine = radial_integrals(kernels, params, g2, knots, 6);
    const RadialIntegrals coarse = radial_integrals(kernels, params, g2, knots, 3);
    res.near_field = fine.j;
    res.correlation = fine.k;
    res.quad_error = std::max((fine.j - coarse.j).max_abs(), (fine.k - coarse.k).max_abs());
    res.value = res.mean_field + res.near_field + res.correlation;
    res.converged = res.quad_error <= params.rel_tol * std::max(1.0, res.value.max_abs());
    return res;
}

}  // namespace

Mu2Result mu2_evaluate(const std::function<double(double)>& g2_radial, const Mu2Params& params) {
    return evaluate_impl(g2_radial, params, false, {params.r0, 2.0 * params.r0});
}

Mu2Result nu2_evaluate(const std::function<double(double)>& g2_radial, const Mu2Params& params) {
    return evaluate_impl(g2_radial, params, true, {params.r0, 2.0 * params.r0});
}

Mu2Result mu2_evaluate(const CorrelationEstimate& g2, const Mu2Params& params) {
    if (!(g2.hardcore_r0 > 2.0))
        throw std::invalid_argument("mu2: binned g2 must come from a hardcore process (r0 > 2)");
    if (g2.bin_edges.back() <= g2.hardcore_r0)
        throw std::invalid_argument("mu2: binned g2 does not cover r > r0");

    const auto lookup = [&g2](double r) -> double {
        if (r < g2.bin_edges.front()) return r < g2.hardcore_r0 ? 0.0 : 1.0;
        if (r >= g2.bin_edges.back()) return 1.0;
        const std::size_t k =
            std::upper_bound(g2.bin_edges.begin(), g2.bin_edges.end(), r) - g2.bin_edges.begin() - 1;
        return g2.g2[k];
    };
    std::vector<double> knots = g2.bin_edges;
    knots.push_back(params.r0);
    knots.push_back(2.0 * params.r0);
    Mu2Result res = evaluate_impl(lookup, params, false, knots);

    // propagate bin noise through the correlation part
    const double big_r = std::cbrt(params.n);
    const Cutoff chi = chi0(params.r0);
    PairShellTable table(2.0 + 1e-7, 2.0 * big_r, params.radial_nodes / 2, params.sphere_order);
    double var = 0.0;
    const GaussLegendre gl = gauss_legendre(8);
    for (std::size_t b = 0; b < g2.nbins(); ++b) {
        const double a = std::max(g2.bin_edges[b], 2.0 + 1e-7);
        const double c = std::min(g2.bin_edges[b + 1], 2.0 * big_r);
        if (!(c > a) || g2.g2_stderr[b] == 0.0) continue;
        double weight = 0.0;
        for (int i = 0; i < 8; ++i) {
            const double r = a + (c - a) * 0.5 * (gl.nodes[i] + 1.0);
            const double w = (c - a) * 0.5 * gl.weights[i];
            weight += w * r * r * chi(r) * overlap_weight(r, big_r) * table.full(r).max_abs();
        }
        var += (0.5 * kRhoJacobian * weight * g2.g2_stderr[b]) *
               (0.5 * kRhoJacobian * weight * g2.g2_stderr[b]);
    }
    res.mc_error = std::sqrt(var);

    if (params.use_mc) {
        // stratified Monte Carlo over (r, angle) per bin for the correlation part;
        // the region outside the binned range (hardcore hole below the first edge,
        // g2 = 1 beyond the last) keeps its deterministic value
        PairShellTable mc_table(2.0 + 1e-7, 2.0 * big_r, params.radial_nodes, params.sphere_order);
        RadialKernels mc_kernels{&mc_table, false};
        const auto g2_outside = [&g2, &lookup](double r) {
            return (r >= g2.bin_edges.front() && r < g2.bin_edges.back()) ? 1.0 : lookup(r);
        };
        const RadialIntegrals outside =
            radial_integrals(mc_kernels, params, g2_outside, knots, 6);
        RngStream rng(params.mc_seed, 0);
        ViscTensor k_mc = outside.k;
        double mc_var = 0.0;
        for (std::size_t b = 0; b < g2.nbins(); ++b) {
            const double a = std::max(g2.bin_edges[b], 2.0 + 1e-7);
            const double c = std::min(g2.bin_edges[b + 1], 2.0 * big_r);
            if (!(c > a)) continue;
            const double gm1 = g2.g2[b] - 1.0;
            if (gm1 == 0.0) continue;
            const double vol = 4.0 / 3.0 * kPi * (c * c * c - a * a * a);
            ViscTensor mean = ViscTensor::zero();
            ViscTensor sq = ViscTensor::zero();
            const std::size_t m = params.mc_samples_per_bin;
            for (std::size_t sidx = 0; sidx < m; ++sidx) {
                const double r = std::cbrt(a * a * a + (c * c * c - a * a * a) * rng.next_double());
                double uu, vv, ss;
                do {
                    uu = 2.0 * rng.next_double() - 1.0;
                    vv = 2.0 * rng.next_double() - 1.0;
                    ss = uu * uu + vv * vv;
                } while (ss >= 1.0);
                const double root = 2.0 * std::sqrt(1.0 - ss);
                const Vec3 w{uu * root, vv * root, 1.0 - 2.0 * ss};
                const double f = chi(r) * overlap_weight(r, big_r);
                const ViscTensor p = (f * kFunctionalPrefactor) * pair_response_closed(w * r);
                mean += (1.0 / m) * p;
                for (int e = 0; e < 25; ++e) sq.a[e] += p.a[e] * p.a[e] / m;
            }
            k_mc += (0.5 * kRhoJacobian * gm1 * vol) * mean;
            // per-entry standard error of the bin mean, worst entry
            double worst = 0.0;
            for (int e = 0; e < 25; ++e)
                worst = std::max(worst,
                                 std::max(0.0, sq.a[e] - mean.a[e] * mean.a[e]) / m);
            mc_var += std::pow(0.5 * kRhoJacobian * std::abs(gm1) * vol, 2) * worst;
        }
        res.correlation = k_mc;
        res.value = res.mean_field + res.near_field + res.correlation;
        res.mc_error = std::sqrt(var + mc_var);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Cluster expansion
// ---------------------------------------------------------------------------

ClusterExpansion cluster_expansion_build(const PointConfiguration& config, const StrainTensor& s,
                                         const TwoSphereSolveParams& params) {
    const std::size_t n = config.centers.size();
    ClusterExpansion out;
    out.flow.background = s;
    out.pair_deviation_sum.assign(n, StrainTensor{});
    out.pair_deviation.assign(n, std::vector<StrainTensor>(n));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
            const double sep = (config.centers[k] - config.centers[l]).norm();
            if (sep <= 2.0) {
                out.ok = false;
                out.flagged_pairs.emplace_back(k, l);
                continue;
            }
            const TwoSphereSolution sol =
                two_sphere_solve(config.centers[k], config.centers[l], s, params);
            if (!sol.converged) {
                out.ok = false;
                out.flagged_pairs.emplace_back(k, l);
                continue;
            }
            out.pair_deviation[k][l] = sol.dipole_y - s;
            out.pair_deviation[l][k] = sol.dipole_z - s;
            out.pair_deviation_sum[k] += out.pair_deviation[k][l];
            out.pair_deviation_sum[l] += out.pair_deviation[l][k];
        }
    out.flow.responses.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        out.flow.responses.push_back({config.centers[k], s + out.pair_deviation_sum[k]});
    return out;
}

std::vector<double> cluster_boundary_residuals(const PointConfiguration& config,
                                               const ClusterExpansion& cluster) {
    const std::size_t n = config.centers.size();
    std::vector<double> res(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        StrainTensor ambient = cluster.flow.background;
        for (std::size_t l = 0; l < n; ++l) {
            if (l == k) continue;
            ambient += m0_ball_avg_apply(config.centers[k] - config.centers[l],
                                         cluster.flow.responses[l].dipole);
        }
        res[k] = (ambient - cluster.flow.responses[k].dipole).norm();
    }
    return res;
}

ResidualProxies residual_proxies(const PointConfiguration& config, const ClusterExpansion& cluster,
                                 const StrainTensor& s, const BallQuadrature& ball) {
    const std::size_t n = config.centers.size();
    ResidualProxies out;
    if (config.domain.kind != Domain::Kind::Ball)
        throw std::invalid_argument("residual_proxies: ball domain required");
    const double n_domain = std::pow(config.domain.radius, 3);

    for (std::size_t i = 0; i < n; ++i) {
        double acc_err = 0.0, acc_phi = 0.0;
        for (std::size_t q = 0; q < ball.size(); ++q) {
            const Vec3 x = config.centers[i] + ball.nodes[q];
            StrainTensor sum_err, sum_phi;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == i) continue;
                const Vec3 d = x - config.centers[k];
                // pairs {k, l} avoiding i: per sphere k the dipole sum minus the
                // contribution of the pair {k, i}
                sum_err += m0_apply(d, cluster.pair_deviation_sum[k] - cluster.pair_deviation[k][i]);
                sum_phi += m0_apply(d, s);
            }
            acc_err += ball.weights[q] * sum_err.norm2();
            acc_phi += ball.weights[q] * sum_phi.norm2();
        }
        out.uerr += acc_err;
        out.phisum += acc_phi;
    }
    out.uerr /= n_domain;
    out.phisum /= n_domain;
    return out;
}

ResidualScalingReport residual_diagnostics(const std::vector<double>& phis, const StrainTensor& s,
                                           const ResidualScalingParams& params) {
    if (phis.size() < 3) throw std::invalid_argument("residual_diagnostics: need >= 3 phi points");
    ResidualScalingReport rep;
    rep.phis = phis;
    const BallQuadrature ball = ball_quadrature(params.ball_radial, params.ball_sphere_order);

    for (std::size_t pi = 0; pi < phis.size(); ++pi) {
        const double phi = phis[pi];
        const double rho = intensity_from_phi(phi);
        const double lambda = matern1_poisson_intensity_for(rho, params.r0);
        const double big_l = std::cbrt(static_cast<double>(params.target_spheres) / phi);

        std::vector<ResidualProxies> vals(params.ensemble);
        parallel_for(params.ensemble, params.threads, [&](std::size_t m) {
            const PointConfiguration config = matern1_sample(
                lambda, Domain::ball(big_l), params.r0, params.seed, pi * 1000003ull + m);
            const ClusterExpansion cluster = cluster_expansion_build(config, s);
            vals[m] = residual_proxies(config, cluster, s, ball);
        });

        double mu_e = 0, mu_p = 0, spheres = 0;
        for (std::size_t m = 0; m < params.ensemble; ++m) {
            mu_e += vals[m].uerr / params.ensemble;
            mu_p += vals[m].phisum / params.ensemble;
        }
        double se_e = 0, se_p = 0;
        for (std::size_t m = 0; m < params.ensemble; ++m) {
            se_e += (vals[m].uerr - mu_e) * (vals[m].uerr - mu_e);
            se_p += (vals[m].phisum - mu_p) * (vals[m].phisum - mu_p);
        }
        if (params.ensemble > 1) {
            se_e = std::sqrt(se_e / (params.ensemble - 1) / params.ensemble);
            se_p = std::sqrt(se_p / (params.ensemble - 1) / params.ensemble);
        }
        spheres = phi * big_l * big_l * big_l;
        rep.uerr_mean.push_back(mu_e);
        rep.uerr_stderr.push_back(se_e);
        rep.phisum_mean.push_back(mu_p);
        rep.phisum_stderr.push_back(se_p);
        rep.mean_spheres.push_back(spheres);
    }
    rep.uerr_slope = loglog_slope(rep.phis, rep.uerr_mean);
    rep.phisum_slope = loglog_slope(rep.phis, rep.phisum_mean);
    return rep;
}

// ---------------------------------------------------------------------------
// Finite-N viscosity
// ---------------------------------------------------------------------------

NBodySolution nbody_dipole_solve(const std::vector<Vec3>& centers, const StrainTensor& s,
                                 int max_sweeps, double tol, int threads) {
    const std::size_t n = centers.size();
    NBodySolution sol;
    sol.dipoles.assign(n, s);
    if (n <= 1) {
        sol.converged = true;
        return sol;
    }
    std::vector<StrainTensor> next(n);
    double prev_res = 0.0;
    int grew = 0;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        parallel_for(n, threads, [&](std::size_t k) {
            StrainTensor e = s;
            for (std::size_t l = 0; l < n; ++l) {
                if (l == k) continue;
                e += m0_ball_avg_apply(centers[k] - centers[l], sol.dipoles[l]);
            }
            next[k] = e;
        });
        double res = 0.0;
        for (std::size_t k = 0; k < n; ++k) res = std::max(res, (next[k] - sol.dipoles[k]).norm());
        sol.dipoles.swap(next);
        sol.sweeps = sweep + 1;
        sol.residual = res;
        if (res < tol) {
            sol.converged = true;
            return sol;
        }
        grew = (sweep > 0 && res > prev_res) ? grew + 1 : 0;
        if (grew >= 3 && res > 10.0 * s.norm()) return sol;  // diverging (dense packing)
        prev_res = res;
    }
    return sol;
}

FiniteNViscosity finite_n_viscosity(const PointConfiguration& config, const StrainTensor& s,
                                    const FiniteNParams& params) {
    if (config.domain.kind != Domain::Kind::Ball)
        throw std::invalid_argument("finite_n_viscosity: ball domain required");
    const double big_l = config.domain.radius;
    const double n_domain = big_l * big_l * big_l;

    std::vector<Vec3> interior;
    interior.reserve(config.centers.size());
    for (const auto& c : config.centers)
        if (config.domain.boundary_distance(c) >= 1.0) interior.push_back(c);

    FiniteNViscosity out;
    out.interior_spheres = interior.size();
    const NBodySolution sol =
        nbody_dipole_solve(interior, s, params.max_sweeps, params.tol, params.threads);
    out.converged = sol.converged;
    out.sweeps = sol.sweeps;

    double functional = 0.0;
    if (params.by_quadrature) {
        const SphereQuadrature quad = sphere_quadrature(params.quad_order);
        FlowExpansion field;
        field.background = s;
        field.responses.reserve(interior.size());
        for (std::size_t k = 0; k < interior.size(); ++k)
            field.responses.push_back({interior[k], sol.dipoles[k]});
        std::vector<double> vals(interior.size());
        parallel_for(interior.size(), params.threads, [&](std::size_t k) {
            vals[k] = surface_functional(field, interior[k], 1.0, s, quad);
        });
        for (double v : vals) functional += v;
    } else {
        // per-sphere value of the conserved functional at dipole truncation:
        // the own response contributes (20 pi / 3) E_i : S, every other term vanishes
        for (const auto& e : sol.dipoles) functional += kFunctionalPrefactor * e.contract(s);
    }
    out.functional_sum = functional;
    out.value = s.norm2() + functional / (2.0 * (4.0 / 3.0) * kPi * n_domain);
    return out;
}

EinsteinTrendReport einstein_trend(const std::vector<double>& phis, const StrainTensor& s,
                                   const EinsteinTrendParams& params) {
    if (phis.size() < 2) throw std::invalid_argument("einstein_trend: need >= 2 phi points");
    EinsteinTrendReport rep;
    rep.phis = phis;
    rep.s_norm2 = s.norm2();
    const double big_l = std::cbrt(params.n_domain);

    for (std::size_t pi = 0; pi < phis.size(); ++pi) {
        const double rho = intensity_from_phi(phis[pi]);
        const double lambda = matern1_poisson_intensity_for(rho, params.r0);
        std::vector<double> visc(params.ensemble);
        std::vector<double> count(params.ensemble);
        parallel_for(params.ensemble, params.threads, [&](std::size_t m) {
            const PointConfiguration config = matern1_sample(
                lambda, Domain::ball(big_l), params.r0, params.seed, pi * 1000003ull + m);
            FiniteNParams fp;
            fp.by_quadrature = false;
            fp.threads = 1;
            const FiniteNViscosity v = finite_n_viscosity(config, s, fp);
            visc[m] = v.value;
            count[m] = static_cast<double>(v.interior_spheres);
        });
        double mu = 0, nsph = 0;
        for (std::size_t m = 0; m < params.ensemble; ++m) {
            mu += visc[m] / params.ensemble;
            nsph += count[m] / params.ensemble;
        }
        double var = 0;
        for (std::size_t m = 0; m < params.ensemble; ++m) var += (visc[m] - mu) * (visc[m] - mu);
        const double se = params.ensemble > 1
                              ? std::sqrt(var / (params.ensemble - 1) / params.ensemble)
                              : 0.0;
        rep.mean_visc.push_back(mu);
        rep.stderr_visc.push_back(se);
        rep.mean_spheres.push_back(nsph);
    }

    // least squares with intercept; slope noise from the per-phi standard errors
    const double n = static_cast<double>(phis.size());
    double xbar = 0;
    for (double p : phis) xbar += p / n;
    double sxx = 0;
    for (double p : phis) sxx += (p - xbar) * (p - xbar);
    double slope = 0, var_slope = 0;
    for (std::size_t i = 0; i < phis.size(); ++i) {
        const double a = (phis[i] - xbar) / sxx;
        slope += a * rep.mean_visc[i];
        var_slope += a * a * rep.stderr_visc[i] * rep.stderr_visc[i];
    }
    rep.slope = slope;
    rep.slope_stderr = std::sqrt(var_slope);
    return rep;
}

}  // namespace susp
