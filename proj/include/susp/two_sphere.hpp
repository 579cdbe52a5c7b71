#pragma once

#include <string>
#include <vector>

#include "susp/quadrature.hpp"
#include "susp/single_sphere.hpp"
#include "susp/tensor.hpp"

namespace susp {

// Default interaction thresholds, all overridable at the call sites: hardcore
// radius, the separation beyond which the far-field pair tensor is served, and
// the observation radius beyond which a close pair's field is dipole-clean.
inline constexpr double kDefaultR0 = 2.5;
inline constexpr double kDefaultR1 = 5.0;
inline constexpr double kDefaultR2 = 2.0 * kDefaultR1 + kDefaultR0 + 1.0;

// Background strain plus a list of strain-dipole responses. Represents any
// dipole-truncated Stokes field: induced velocity = S x + sum_i Phi0(x - c_i; E_i),
// with E_i the phi0 coefficient of sphere i (single isolated sphere: E = S).
struct FlowExpansion {
    StrainTensor background;
    std::vector<SphereResponse> responses;

    Vec3 velocity(const Vec3& x) const;
    double pressure(const Vec3& x) const;
    StrainTensor strain(const Vec3& x) const;          // D u, background included
    StrainTensor deviation_strain(const Vec3& x) const; // D u - S
    // sigma(u, p) n with sigma = 2 D(u) - p Id.
    Vec3 traction(const Vec3& x, const Vec3& n) const;
};

// Negated average over the unit ball at target_center of the source's symmetric
// gradient, via the analytic ball mean of M0. For a pure background S this is -S;
// the dipole a sphere at target_center must carry to cancel the ambient flow is the
// negation of this value. Throws if the target ball gets within min_separation of a
// source sphere (default: touching, separation 2).
StrainTensor reflect_dipole(const FlowExpansion& source, const Vec3& target_center,
                            double min_separation = 2.0);

struct TwoSphereSolveParams {
    int max_reflections = 64;
    double tol = 1e-13;
    double close_pair_threshold = 2.5;  // below this separation accuracy is reduced
};

// Method-of-reflections solution of the two-sphere problem at dipole truncation.
// Solves are pure functions of their inputs and solutions are immutable, so batch
// solves over many pairs can run concurrently without shared state.
struct TwoSphereSolution {
    Vec3 y, z;
    StrainTensor background;
    StrainTensor dipole_y, dipole_z;  // phi0 coefficients; -> S as |y-z| -> inf
    int reflections = 0;
    bool converged = false;
    bool reduced_accuracy = false;    // 2 < |y-z| < close_pair_threshold
    double residual = 0.0;            // last dipole increment (Frobenius)
    double contraction_ratio = 0.0;   // measured increment ratio
    std::string method = "analytic-ball-average";

    FlowExpansion full_field() const;  // S x plus both responses
    FlowExpansion psi_field() const;   // interaction field: dipoles minus single-sphere value
};

TwoSphereSolution two_sphere_solve(const Vec3& y, const Vec3& z, const StrainTensor& s,
                                   const TwoSphereSolveParams& params = {});

// Strain of the interaction field Psi at x (x outside both spheres):
// M0(x-y)(E_y - S) + M0(x-z)(E_z - S).
StrainTensor psi_strain(const TwoSphereSolution& sol, const Vec3& x);

// Pair response tensor: maps S to the dipole perturbation E_y - S of the converged
// solve, assembled column-by-column over the 5 basis strains. Even in d, symmetric
// as a 5x5, and within O(|d|^-5) of M0(d) in the far field.
ViscTensor pair_response_tensor(const Vec3& d, const TwoSphereSolveParams& params = {});

// Far-field tensor M_l: pair_response_tensor restricted to |d| >= r1.
ViscTensor far_field_tensor(const Vec3& d, double r1 = kDefaultR1,
                            const TwoSphereSolveParams& params = {});

// Near-field tensor M_s: the same extraction on the close-pair range. The equal
// spheres make both deviation dipoles coincide at every admissible separation, so a
// single tensor serves both regimes.
ViscTensor near_field_tensor(const Vec3& d, const TwoSphereSolveParams& params = {});

// Total stresslet of the pair in far-field normalization: the deviation of the pair
// field about the midpoint m satisfies D u(x) = -(3/20pi) M0(x-m) S_f + O(|x-m|^-4),
// giving S_f = -(20pi/3)(E_y + E_z). Symmetric trace-free by construction.
StrainTensor stresslet_extract(const TwoSphereSolution& sol);

// C^2 radial cutoff: 0 on [0, (2+r0)/4], 1 on [r0, inf), quintic smoothstep between
// (6t^5 - 15t^4 + 10t^3 on the normalized transition variable).
struct Cutoff {
    double inner;  // (2 + r0) / 4
    double outer;  // r0
    double operator()(double r) const;
    double operator()(const Vec3& v) const { return (*this)(v.norm()); }
};
Cutoff chi0(double r0 = kDefaultR0);

// Cutoff interaction kernel S_{y,z}(x) = chi0(x-y) chi0(x-z) chi0(y-z) D Psi_{y,z}(x).
// Total: returns zero whenever a cutoff vanishes or the two-sphere problem is not
// solvable (|y-z| <= 2, which the hardcore support never meets).
StrainTensor cutoff_kernel(const Vec3& x, const Vec3& y, const Vec3& z,
                           const StrainTensor& s, double r0 = kDefaultR0,
                           const TwoSphereSolveParams& params = {});

// Conserved surface functional of a dipole expansion on the sphere |x - center| = r:
//   int ( sigma(u,p) n . S_test (x - center)  -  2 u . S_test n ) dsigma.
// For homogeneous Stokes fields it is independent of r across source-free annuli
// (the r-weight on the traction term keeps it conserved away from r = 1).
double surface_functional(const FlowExpansion& field, const Vec3& center, double radius,
                          const StrainTensor& s_test, const SphereQuadrature& quad);

}  // namespace susp
