#include <cmath>
#include <numbers>

#include "susp/quadrature.hpp"
#include "susp/tensor.hpp"

namespace susp {

Mat3 rotation(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (n == 0.0) throw std::invalid_argument("rotation: zero axis");
    const Vec3 u = axis / n;
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = (i == j ? c : 0.0) + (1 - c) * u[i] * u[j];
    r(0, 1) += -s * u.z; r(0, 2) += s * u.y;
    r(1, 0) += s * u.z;  r(1, 2) += -s * u.x;
    r(2, 0) += -s * u.y; r(2, 1) += s * u.x;
    return r;
}

bool StrainTensor::is_valid(double tol) const {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!std::isfinite(m(i, j)) || std::abs(m(i, j) - m(j, i)) > tol) return false;
    return std::abs(m.trace()) <= tol;
}

StrainTensor sym_trace_free_project(const Mat3& m) {
    for (double v : m.a)
        if (!std::isfinite(v)) throw std::invalid_argument("sym_trace_free_project: non-finite entry");
    Mat3 s = (m + m.transpose()) * 0.5;
    const double t = s.trace() / 3.0;
    s(0, 0) -= t; s(1, 1) -= t; s(2, 2) -= t;
    return StrainTensor{s};
}

const std::array<StrainTensor, 5>& strain_basis() {
    static const std::array<StrainTensor, 5> basis = [] {
        const double r2 = 1.0 / std::sqrt(2.0);
        const double r6 = 1.0 / std::sqrt(6.0);
        std::array<StrainTensor, 5> b;
        Mat3 m;

        m = Mat3::zero(); m(0, 0) = r2; m(1, 1) = -r2;
        b[0] = StrainTensor{m};
        m = Mat3::zero(); m(0, 0) = r6; m(1, 1) = r6; m(2, 2) = -2 * r6;
        b[1] = StrainTensor{m};
        m = Mat3::zero(); m(0, 1) = m(1, 0) = r2;
        b[2] = StrainTensor{m};
        m = Mat3::zero(); m(0, 2) = m(2, 0) = r2;
        b[3] = StrainTensor{m};
        m = Mat3::zero(); m(1, 2) = m(2, 1) = r2;
        b[4] = StrainTensor{m};
        return b;
    }();
    return basis;
}

std::array<double, 5> strain_to_coords(const StrainTensor& s) {
    const auto& b = strain_basis();
    std::array<double, 5> c;
    for (int k = 0; k < 5; ++k) c[k] = s.contract(b[k]);
    return c;
}

StrainTensor strain_from_coords(const std::array<double, 5>& c) {
    const auto& b = strain_basis();
    StrainTensor s;
    for (int k = 0; k < 5; ++k) s += b[k] * c[k];
    return s;
}

StrainTensor rotate(const StrainTensor& s, const Mat3& rot) {
    return StrainTensor{rot.matmul(s.m).matmul(rot.transpose())};
}

ViscTensor ViscTensor::outer(const StrainTensor& u, const StrainTensor& v) {
    const auto cu = strain_to_coords(u), cv = strain_to_coords(v);
    ViscTensor t;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) t(i, j) = cu[i] * cv[j];
    return t;
}

StrainTensor visc_apply(const ViscTensor& t, const StrainTensor& s) {
    const auto c = strain_to_coords(s);
    std::array<double, 5> out{};
    for (int i = 0; i < 5; ++i) {
        double acc = 0;
        for (int j = 0; j < 5; ++j) acc += t(i, j) * c[j];
        out[i] = acc;
    }
    return strain_from_coords(out);
}

double visc_quad(const ViscTensor& t, const StrainTensor& s) {
    const auto c = strain_to_coords(s);
    double acc = 0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) acc += c[i] * t(i, j) * c[j];
    return acc;
}

ViscTensor solve_i_minus(const ViscTensor& a, const ViscTensor& b) {
    double lhs[5][6];
    ViscTensor x;
    for (int col = 0; col < 5; ++col) {
        for (int i = 0; i < 5; ++i) {
            for (int j = 0; j < 5; ++j) lhs[i][j] = (i == j ? 1.0 : 0.0) - a(i, j);
            lhs[i][5] = b(i, col);
        }
        for (int k = 0; k < 5; ++k) {
            int piv = k;
            for (int i = k + 1; i < 5; ++i)
                if (std::abs(lhs[i][k]) > std::abs(lhs[piv][k])) piv = i;
            if (std::abs(lhs[piv][k]) < 1e-300) throw std::runtime_error("solve_i_minus: singular system");
            if (piv != k)
                for (int j = k; j < 6; ++j) std::swap(lhs[k][j], lhs[piv][j]);
            for (int i = k + 1; i < 5; ++i) {
                const double f = lhs[i][k] / lhs[k][k];
                for (int j = k; j < 6; ++j) lhs[i][j] -= f * lhs[k][j];
            }
        }
        for (int i = 4; i >= 0; --i) {
            double s = lhs[i][5];
            for (int j = i + 1; j < 5; ++j) s -= lhs[i][j] * x(j, col);
            x(i, col) = s / lhs[i][i];
        }
    }
    return x;
}

ViscTensor rotate(const ViscTensor& t, const Mat3& rot) {
    const auto& basis = strain_basis();
    // rho(R)_{jk} = <b_j, R b_k R^T>
    double rho[5][5];
    for (int k = 0; k < 5; ++k) {
        const StrainTensor rb = rotate(basis[k], rot);
        for (int j = 0; j < 5; ++j) rho[j][k] = basis[j].contract(rb);
    }
    ViscTensor out;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            double s = 0;
            for (int k = 0; k < 5; ++k)
                for (int l = 0; l < 5; ++l) s += rho[i][k] * t(k, l) * rho[j][l];
            out(i, j) = s;
        }
    return out;
}

GaussLegendre gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
    GaussLegendre gl;
    gl.nodes.resize(n);
    gl.weights.resize(n);
    // Newton on P_n with the usual Chebyshev initial guess.
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        gl.nodes[i] = x;
        gl.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return gl;
}

SphereQuadrature sphere_quadrature(int order) {
    if (order < 2) throw std::invalid_argument("sphere_quadrature: order >= 2 required");
    const int n_polar = order / 2 + 1;       // GL exact through degree 2*n_polar - 1 >= order
    const int n_azimuth = order + 1;         // uniform grid exact through trig degree order
    const GaussLegendre gl = gauss_legendre(n_polar);

    SphereQuadrature q;
    q.order = order;
    q.nodes.reserve(static_cast<std::size_t>(n_polar) * n_azimuth);
    q.weights.reserve(q.nodes.capacity());
    const double dphi = 2.0 * std::numbers::pi / n_azimuth;
    for (int i = 0; i < n_polar; ++i) {
        const double c = gl.nodes[i];
        const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        const double w = gl.weights[i] * dphi;
        for (int j = 0; j < n_azimuth; ++j) {
            const double phi = dphi * (j + 0.5);
            q.nodes.push_back({s * std::cos(phi), s * std::sin(phi), c});
            q.weights.push_back(w);
        }
    }
    return q;
}

BallQuadrature ball_quadrature(int radial_order, int sphere_order) {
    const GaussLegendre gl = gauss_legendre(radial_order);
    const SphereQuadrature sq = sphere_quadrature(sphere_order);
    BallQuadrature b;
    b.nodes.reserve(gl.nodes.size() * sq.size());
    b.weights.reserve(b.nodes.capacity());
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double r = 0.5 * (gl.nodes[i] + 1.0);
        const double wr = 0.5 * gl.weights[i] * r * r;
        for (std::size_t j = 0; j < sq.size(); ++j) {
            b.nodes.push_back(sq.nodes[j] * r);
            b.weights.push_back(wr * sq.weights[j]);
        }
    }
    return b;
}

}  // namespace susp
