#pragma once

#include "susp/quadrature.hpp"
#include "susp/tensor.hpp"

namespace susp {

// Closed-form solution of the one-sphere Stokes problem: the disturbance field of a
// rigid unit sphere at the origin immersed in the linear background flow E x
// (E symmetric trace-free), with zero net force and torque:
//
//   Phi0(x) = -5/2 (E : x(x)x) x / |x|^5  -  E x / |x|^5  +  5/2 (E : x(x)x) x / |x|^7
//   P0(x)   = -5 (E : x(x)x) / |x|^5
//
// On |x| = 1 the three terms combine to -E x, so E x + Phi0 vanishes (no slip), and
// the traction is sigma(Phi0, P0) n = 3 E x.

// Velocity of the disturbance field at x (|x| > 0, sphere center at the origin).
// Linear in E, decays like |x|^-2.
Vec3 phi0_velocity(const Vec3& x, const StrainTensor& e);

// Pressure of the disturbance field; homogeneous of degree -3, linear in E.
double phi0_pressure(const Vec3& x, const StrainTensor& e);

// Symmetric gradient kernel: D Phi0(x) = M0(x) E. Hand-differentiated closed form,
// split by homogeneity: M0 = M (degree -3) + M5 (degree -5). The degree -3 part has
// zero mean over every sphere |x| = r, the property behind all principal-value
// handling downstream; the degree -5 part is harmonic and shares the property.
StrainTensor m0_apply(const Vec3& x, const StrainTensor& e);
StrainTensor m0_deg3_apply(const Vec3& x, const StrainTensor& e);
StrainTensor m0_deg5_apply(const Vec3& x, const StrainTensor& e);

// Average of M0(. - z) over the unit ball centered at y, as a function of d = y - z,
// |d| >= 2. Phi0 is biharmonic so the ball average is exactly M0 + Lap(M0)/10, and
// Lap(M0)/10 coincides with the degree -5 part: avg = M + 2 M5. (Faxen's stresslet
// operator 1 + Lap/10 is exact here.)
StrainTensor m0_ball_avg_apply(const Vec3& d, const StrainTensor& e);

// 5x5 matrices of the maps above in the fixed strain basis.
ViscTensor m0_kernel(const Vec3& x);
ViscTensor m0_kernel_deg3(const Vec3& x);
ViscTensor m0_kernel_deg5(const Vec3& x);
ViscTensor m0_kernel_ball_avg(const Vec3& d);

// Traction sigma(Phi0, P0) n on the unit sphere, returned as the analytic 3 E x.
// x must satisfy ||x| - 1| < 1e-12.
Vec3 boundary_stress(const Vec3& x, const StrainTensor& e);

// Same traction assembled from the derivative and pressure fields,
// sigma n = 2 (M0(x) E) x - P0(x) x. Cross-validation path for tests.
Vec3 boundary_stress_from_derivatives(const Vec3& x, const StrainTensor& e);

// Surface functional int_{|x|=1} (sigma(Phi0,P0) n - 2 Phi0) . S n, evaluated by
// quadrature on the assembled fields. Equals (20 pi / 3) |S|^2 up to quadrature error.
double single_sphere_functional(const StrainTensor& s, const SphereQuadrature& quad);

// (3 / 8 pi) * single_sphere_functional(S) / |S|^2 = 5/2, the Einstein coefficient.
double einstein_coefficient();

// A sphere's strain-dipole response field: the Phi0 field with coefficient
// `dipole` centered at `center`. An isolated sphere in background strain S
// carries dipole = S.
struct SphereResponse {
    Vec3 center;
    StrainTensor dipole;

    Vec3 velocity(const Vec3& x) const { return phi0_velocity(x - center, dipole); }
    double pressure(const Vec3& x) const { return phi0_pressure(x - center, dipole); }
    StrainTensor strain(const Vec3& x) const { return m0_apply(x - center, dipole); }
};

}  // namespace susp
