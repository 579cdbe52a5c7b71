#include "susp/single_sphere.hpp"

#include <cmath>
#include <numbers>

namespace susp {

namespace {

void require_nonzero(const Vec3& x) {
    if (x.norm2() == 0.0) throw std::domain_error("single_sphere: singular at x = 0");
}

// sigma_ij = (Ex)_i x_j + x_i (Ex)_j assembled into the common building blocks.
struct Blocks {
    double r2, r3, r5, r7, r9;
    double a;   // x . E x
    Vec3 ex;    // E x
};

Blocks blocks(const Vec3& x, const StrainTensor& e) {
    Blocks b;
    b.r2 = x.norm2();
    const double r = std::sqrt(b.r2);
    b.r3 = b.r2 * r;
    b.r5 = b.r3 * b.r2;
    b.r7 = b.r5 * b.r2;
    b.r9 = b.r7 * b.r2;
    b.ex = e.apply(x);
    b.a = x.dot(b.ex);
    return b;
}

StrainTensor assemble(const Vec3& x, const Blocks& b, double c_sig, double c_adel, double c_app) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            m(i, j) = c_sig * (b.ex[i] * x[j] + x[i] * b.ex[j]) + c_app * b.a * x[i] * x[j];
    m(0, 0) += c_adel * b.a;
    m(1, 1) += c_adel * b.a;
    m(2, 2) += c_adel * b.a;
    return StrainTensor{m};
}

ViscTensor matrix_of(const Vec3& x, StrainTensor (*apply)(const Vec3&, const StrainTensor&)) {
    const auto& basis = strain_basis();
    ViscTensor t;
    for (int k = 0; k < 5; ++k) {
        const auto col = strain_to_coords(apply(x, basis[k]));
        for (int i = 0; i < 5; ++i) t(i, k) = col[i];
    }
    return t;
}

}  // namespace

Vec3 phi0_velocity(const Vec3& x, const StrainTensor& e) {
    require_nonzero(x);
    const Blocks b = blocks(x, e);
    return x * (-2.5 * b.a / b.r5 + 2.5 * b.a / b.r7) - b.ex / b.r5;
}

double phi0_pressure(const Vec3& x, const StrainTensor& e) {
    require_nonzero(x);
    const Blocks b = blocks(x, e);
    return -5.0 * b.a / b.r5;
}

StrainTensor m0_deg3_apply(const Vec3& x, const StrainTensor& e) {
    require_nonzero(x);
    const Blocks b = blocks(x, e);
    return assemble(x, b, -2.5 / b.r5, -2.5 / b.r5, 12.5 / b.r7);
}

StrainTensor m0_deg5_apply(const Vec3& x, const StrainTensor& e) {
    require_nonzero(x);
    const Blocks b = blocks(x, e);
    StrainTensor out = assemble(x, b, 5.0 / b.r7, 2.5 / b.r7, -17.5 / b.r9);
    out += e * (-1.0 / b.r5);
    return out;
}

StrainTensor m0_apply(const Vec3& x, const StrainTensor& e) {
    require_nonzero(x);
    const Blocks b = blocks(x, e);
    StrainTensor out = assemble(x, b,
                                -2.5 / b.r5 + 5.0 / b.r7,
                                -2.5 / b.r5 + 2.5 / b.r7,
                                12.5 / b.r7 - 17.5 / b.r9);
    out += e * (-1.0 / b.r5);
    return out;
}

StrainTensor m0_ball_avg_apply(const Vec3& d, const StrainTensor& e) {
    require_nonzero(d);
    const Blocks b = blocks(d, e);
    StrainTensor out = assemble(d, b,
                                -2.5 / b.r5 + 10.0 / b.r7,
                                -2.5 / b.r5 + 5.0 / b.r7,
                                12.5 / b.r7 - 35.0 / b.r9);
    out += e * (-2.0 / b.r5);
    return out;
}

ViscTensor m0_kernel(const Vec3& x) { return matrix_of(x, m0_apply); }
ViscTensor m0_kernel_deg3(const Vec3& x) { return matrix_of(x, m0_deg3_apply); }
ViscTensor m0_kernel_deg5(const Vec3& x) { return matrix_of(x, m0_deg5_apply); }
ViscTensor m0_kernel_ball_avg(const Vec3& d) { return matrix_of(d, m0_ball_avg_apply); }

Vec3 boundary_stress(const Vec3& x, const StrainTensor& e) {
    if (std::abs(x.norm() - 1.0) >= 1e-12)
        throw std::invalid_argument("boundary_stress: x not on the unit sphere");
    return e.apply(x) * 3.0;
}

Vec3 boundary_stress_from_derivatives(const Vec3& x, const StrainTensor& e) {
    if (std::abs(x.norm() - 1.0) >= 1e-12)
        throw std::invalid_argument("boundary_stress: x not on the unit sphere");
    const StrainTensor d = m0_apply(x, e);
    return d.apply(x) * 2.0 - x * phi0_pressure(x, e);
}

double single_sphere_functional(const StrainTensor& s, const SphereQuadrature& quad) {
    double acc = 0;
    for (std::size_t k = 0; k < quad.size(); ++k) {
        const Vec3& n = quad.nodes[k];
        const Vec3 traction = boundary_stress_from_derivatives(n, s);
        const Vec3 u = phi0_velocity(n, s);
        acc += quad.weights[k] * (traction - u * 2.0).dot(s.apply(n));
    }
    return acc;
}

double einstein_coefficient() {
    static const SphereQuadrature quad = sphere_quadrature(20);
    const StrainTensor& s = strain_basis()[0];
    return 3.0 / (8.0 * std::numbers::pi) * single_sphere_functional(s, quad) / s.norm2();
}

}  // namespace susp
