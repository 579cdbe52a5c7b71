#include "susp/two_sphere.hpp"

#include <cmath>
#include <numbers>

namespace susp {

Vec3 FlowExpansion::velocity(const Vec3& x) const {
    Vec3 u = background.apply(x);
    for (const auto& r : responses) u += r.velocity(x);
    return u;
}

double FlowExpansion::pressure(const Vec3& x) const {
    double p = 0;
    for (const auto& r : responses) p += r.pressure(x);
    return p;
}

StrainTensor FlowExpansion::strain(const Vec3& x) const {
    StrainTensor d = background;
    for (const auto& r : responses) d += r.strain(x);
    return d;
}

StrainTensor FlowExpansion::deviation_strain(const Vec3& x) const {
    StrainTensor d;
    for (const auto& r : responses) d += r.strain(x);
    return d;
}

Vec3 FlowExpansion::traction(const Vec3& x, const Vec3& n) const {
    // sigma = 2 D(u) - p Id; the background is pressure-free.
    const StrainTensor d = strain(x);
    return d.apply(n) * 2.0 - n * pressure(x);
}

StrainTensor reflect_dipole(const FlowExpansion& source, const Vec3& target_center,
                            double min_separation) {
    StrainTensor avg = source.background;
    for (const auto& r : source.responses) {
        const Vec3 d = target_center - r.center;
        if (d.norm() <= min_separation)
            throw std::invalid_argument("reflect_dipole: target ball overlaps a source sphere");
        avg += m0_ball_avg_apply(d, r.dipole);
    }
    return avg * (-1.0);
}

FlowExpansion TwoSphereSolution::full_field() const {
    return FlowExpansion{background, {{y, dipole_y}, {z, dipole_z}}};
}

FlowExpansion TwoSphereSolution::psi_field() const {
    return FlowExpansion{StrainTensor{}, {{y, dipole_y - background}, {z, dipole_z - background}}};
}

TwoSphereSolution two_sphere_solve(const Vec3& y, const Vec3& z, const StrainTensor& s,
                                   const TwoSphereSolveParams& params) {
    const double sep = (y - z).norm();
    if (sep <= 2.0) throw std::invalid_argument("two_sphere_solve: spheres overlap");

    TwoSphereSolution sol;
    sol.y = y;
    sol.z = z;
    sol.background = s;
    sol.reduced_accuracy = sep < params.close_pair_threshold;

    // Alternating reflections. Each sphere cancels the ball-averaged ambient strain,
    // so its phi0 coefficient is E = S + ballavg(strain of the other response).
    StrainTensor ey = s, ez = s;
    double prev_inc = 0.0;
    int grew = 0;
    std::vector<double> ratios;
    for (int k = 0; k < params.max_reflections; ++k) {
        const StrainTensor ey_new = s + m0_ball_avg_apply(y - z, ez);
        const StrainTensor ez_new = s + m0_ball_avg_apply(z - y, ey_new);
        const double inc = std::max((ey_new - ey).norm(), (ez_new - ez).norm());
        ey = ey_new;
        ez = ez_new;
        sol.reflections = k + 1;
        sol.residual = inc;
        if (k > 0 && prev_inc > 0.0) {
            ratios.push_back(inc / prev_inc);
            grew = inc > prev_inc ? grew + 1 : 0;
            if (grew >= 3 && inc > s.norm()) {  // divergent reflection series
                sol.converged = false;
                sol.dipole_y = ey;
                sol.dipole_z = ez;
                sol.contraction_ratio = ratios.back();
                return sol;
            }
        }
        prev_inc = inc;
        if (inc < params.tol) {
            sol.converged = true;
            break;
        }
    }
    if (!ratios.empty()) {
        double g = 1.0;
        const std::size_t m = std::min<std::size_t>(4, ratios.size());
        for (std::size_t i = ratios.size() - m; i < ratios.size(); ++i) g *= ratios[i];
        sol.contraction_ratio = std::pow(g, 1.0 / m);
    }
    sol.dipole_y = ey;
    sol.dipole_z = ez;
    return sol;
}

StrainTensor psi_strain(const TwoSphereSolution& sol, const Vec3& x) {
    if ((x - sol.y).norm() <= 1.0 || (x - sol.z).norm() <= 1.0)
        throw std::invalid_argument("psi_strain: x inside a sphere");
    return m0_apply(x - sol.y, sol.dipole_y - sol.background) +
           m0_apply(x - sol.z, sol.dipole_z - sol.background);
}

ViscTensor pair_response_tensor(const Vec3& d, const TwoSphereSolveParams& params) {
    const auto& basis = strain_basis();
    ViscTensor t;
    for (int k = 0; k < 5; ++k) {
        const TwoSphereSolution sol = two_sphere_solve(Vec3{0, 0, 0}, -d, basis[k], params);
        if (!sol.converged) throw std::runtime_error("pair_response_tensor: reflections diverged");
        const auto col = strain_to_coords(sol.dipole_y - basis[k]);
        for (int i = 0; i < 5; ++i) t(i, k) = col[i];
    }
    return t;
}

ViscTensor far_field_tensor(const Vec3& d, double r1, const TwoSphereSolveParams& params) {
    if (d.norm() < r1) throw std::invalid_argument("far_field_tensor: separation below threshold");
    return pair_response_tensor(d, params);
}

ViscTensor near_field_tensor(const Vec3& d, const TwoSphereSolveParams& params) {
    return pair_response_tensor(d, params);
}

StrainTensor stresslet_extract(const TwoSphereSolution& sol) {
    if (!sol.converged) throw std::invalid_argument("stresslet_extract: non-converged solution");
    return (sol.dipole_y + sol.dipole_z) * (-20.0 * std::numbers::pi / 3.0);
}

double Cutoff::operator()(double r) const {
    if (r <= inner) return 0.0;
    if (r >= outer) return 1.0;
    const double t = (r - inner) / (outer - inner);
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

Cutoff chi0(double r0) {
    if (r0 <= 2.0) throw std::invalid_argument("chi0: r0 > 2 required");
    return Cutoff{(2.0 + r0) / 4.0, r0};
}

StrainTensor cutoff_kernel(const Vec3& x, const Vec3& y, const Vec3& z,
                           const StrainTensor& s, double r0,
                           const TwoSphereSolveParams& params) {
    const Cutoff chi = chi0(r0);
    const double c = chi(x - y) * chi(x - z) * chi(y - z);
    if (c == 0.0 || (y - z).norm() <= 2.0) return StrainTensor{};
    const TwoSphereSolution sol = two_sphere_solve(y, z, s, params);
    return psi_strain(sol, x) * c;
}

double surface_functional(const FlowExpansion& field, const Vec3& center, double radius,
                          const StrainTensor& s_test, const SphereQuadrature& quad) {
    double acc = 0;
    for (std::size_t k = 0; k < quad.size(); ++k) {
        const Vec3& n = quad.nodes[k];
        const Vec3 x = center + n * radius;
        const Vec3 tr = field.traction(x, n);
        const Vec3 u = field.velocity(x);
        // test field v = S_test (x - center) = radius * S_test n on the sphere
        acc += quad.weights[k] * radius * radius *
               (radius * tr.dot(s_test.apply(n)) - 2.0 * u.dot(s_test.apply(n)));
    }
    return acc;
}

}  // namespace susp
