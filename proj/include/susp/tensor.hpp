#pragma once

#include <array>
#include <stdexcept>

#include "susp/vec3.hpp"

namespace susp {

// Element of Sym_{3,sigma}: symmetric trace-free 3x3 matrix. The applied strain S
// and all strain-dipole coefficients live here.
struct StrainTensor {
    Mat3 m;

    StrainTensor() = default;
    explicit StrainTensor(const Mat3& sym_trace_free) : m(sym_trace_free) {}

    double operator()(int i, int j) const { return m(i, j); }
    Vec3 apply(const Vec3& v) const { return m * v; }

    StrainTensor operator+(const StrainTensor& o) const { return StrainTensor{m + o.m}; }
    StrainTensor operator-(const StrainTensor& o) const { return StrainTensor{m - o.m}; }
    StrainTensor operator*(double s) const { return StrainTensor{m * s}; }
    StrainTensor& operator+=(const StrainTensor& o) { m += o.m; return *this; }

    double contract(const StrainTensor& o) const { return m.frobenius(o.m); }
    double norm2() const { return contract(*this); }
    double norm() const { return std::sqrt(norm2()); }

    // x . S x
    double quad(const Vec3& x) const { return x.dot(m * x); }

    bool is_valid(double tol = 1e-12) const;
};

inline StrainTensor operator*(double s, const StrainTensor& t) { return t * s; }

// Symmetric trace-free projection: (M + M^T)/2 - tr(M)/3 Id. Idempotent.
StrainTensor sym_trace_free_project(const Mat3& m);

// Fixed orthonormal basis of Sym_{3,sigma} used for every 5x5 representation:
//   b0 = (e1e1 - e2e2)/sqrt(2)
//   b1 = (e1e1 + e2e2 - 2 e3e3)/sqrt(6)
//   b2 = (e1e2 + e2e1)/sqrt(2)
//   b3 = (e1e3 + e3e1)/sqrt(2)
//   b4 = (e2e3 + e3e2)/sqrt(2)
// Orthonormal in the Frobenius pairing: <b_j, b_k> = delta_jk.
const std::array<StrainTensor, 5>& strain_basis();

std::array<double, 5> strain_to_coords(const StrainTensor& s);
StrainTensor strain_from_coords(const std::array<double, 5>& c);

// R S R^T for a rotation R; used for equivariance checks.
StrainTensor rotate(const StrainTensor& s, const Mat3& rot);

// Element of Sym(Sym_{3,sigma}) stored as a 5x5 real matrix in the basis above.
// Symmetric as a 5x5 when it represents a viscosity quadratic form; a plain linear
// map (like the kernel M0) uses the same storage.
struct ViscTensor {
    std::array<double, 25> a{};

    double operator()(int i, int j) const { return a[5 * i + j]; }
    double& operator()(int i, int j) { return a[5 * i + j]; }

    static ViscTensor zero() { return {}; }
    static ViscTensor identity() {
        ViscTensor t;
        for (int i = 0; i < 5; ++i) t(i, i) = 1.0;
        return t;
    }
    static ViscTensor outer(const StrainTensor& u, const StrainTensor& v);

    ViscTensor operator+(const ViscTensor& o) const {
        ViscTensor t;
        for (int i = 0; i < 25; ++i) t.a[i] = a[i] + o.a[i];
        return t;
    }
    ViscTensor operator-(const ViscTensor& o) const {
        ViscTensor t;
        for (int i = 0; i < 25; ++i) t.a[i] = a[i] - o.a[i];
        return t;
    }
    ViscTensor operator*(double s) const {
        ViscTensor t;
        for (int i = 0; i < 25; ++i) t.a[i] = a[i] * s;
        return t;
    }
    ViscTensor& operator+=(const ViscTensor& o) {
        for (int i = 0; i < 25; ++i) a[i] += o.a[i];
        return *this;
    }

    ViscTensor matmul(const ViscTensor& o) const {
        ViscTensor t;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                double s = 0;
                for (int k = 0; k < 5; ++k) s += (*this)(i, k) * o(k, j);
                t(i, j) = s;
            }
        return t;
    }

    double max_abs() const {
        double m = 0;
        for (double v : a) m = std::max(m, std::abs(v));
        return m;
    }
    double frobenius_norm() const {
        double s = 0;
        for (double v : a) s += v * v;
        return std::sqrt(s);
    }
    double max_abs_diff(const ViscTensor& o) const {
        double m = 0;
        for (int i = 0; i < 25; ++i) m = std::max(m, std::abs(a[i] - o.a[i]));
        return m;
    }
};

inline ViscTensor operator*(double s, const ViscTensor& t) { return t * s; }

// T S in the fixed basis; linear, lands back in Sym_{3,sigma}.
StrainTensor visc_apply(const ViscTensor& t, const StrainTensor& s);

// Quadratic form (T S) : S.
double visc_quad(const ViscTensor& t, const StrainTensor& s);

// Solve (I - A) X = B columnwise; plain 5x5 Gaussian elimination with partial pivoting.
ViscTensor solve_i_minus(const ViscTensor& a, const ViscTensor& b);

// Conjugation rho(R) T rho(R)^T where rho(R) is the rotation action on the basis coords.
ViscTensor rotate(const ViscTensor& t, const Mat3& rot);

ViscTensor visc_from_linear_map(const StrainTensor (*map)(const StrainTensor&));

}  // namespace susp
