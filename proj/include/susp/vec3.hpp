#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace susp {

// Lengths are in units of the sphere radius (= 1 throughout).
struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }

    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Dense 3x3 matrix, row major. Used for gradients and rotations.
struct Mat3 {
    std::array<double, 9> a{};

    double operator()(int i, int j) const { return a[3 * i + j]; }
    double& operator()(int i, int j) { return a[3 * i + j]; }

    static Mat3 zero() { return {}; }
    static Mat3 identity() {
        Mat3 m;
        m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
        return m;
    }
    static Mat3 outer(const Vec3& u, const Vec3& v) {
        Mat3 m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = u[i] * v[j];
        return m;
    }

    Mat3 operator+(const Mat3& o) const {
        Mat3 m;
        for (int i = 0; i < 9; ++i) m.a[i] = a[i] + o.a[i];
        return m;
    }
    Mat3 operator-(const Mat3& o) const {
        Mat3 m;
        for (int i = 0; i < 9; ++i) m.a[i] = a[i] - o.a[i];
        return m;
    }
    Mat3 operator*(double s) const {
        Mat3 m;
        for (int i = 0; i < 9; ++i) m.a[i] = a[i] * s;
        return m;
    }
    Mat3& operator+=(const Mat3& o) {
        for (int i = 0; i < 9; ++i) a[i] += o.a[i];
        return *this;
    }

    Vec3 operator*(const Vec3& v) const {
        return {a[0] * v.x + a[1] * v.y + a[2] * v.z,
                a[3] * v.x + a[4] * v.y + a[5] * v.z,
                a[6] * v.x + a[7] * v.y + a[8] * v.z};
    }

    Mat3 matmul(const Mat3& o) const {
        Mat3 m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                m(i, j) = s;
            }
        return m;
    }

    Mat3 transpose() const {
        Mat3 m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = (*this)(j, i);
        return m;
    }

    double trace() const { return a[0] + a[4] + a[8]; }

    double frobenius(const Mat3& o) const {
        double s = 0;
        for (int i = 0; i < 9; ++i) s += a[i] * o.a[i];
        return s;
    }

    double max_abs() const {
        double m = 0;
        for (double v : a) m = std::max(m, std::abs(v));
        return m;
    }
};

inline Mat3 operator*(double s, const Mat3& m) { return m * s; }

// Rotation about a unit axis by angle (Rodrigues). Test helper and equivariance checks.
Mat3 rotation(const Vec3& axis, double angle);

}  // namespace susp
