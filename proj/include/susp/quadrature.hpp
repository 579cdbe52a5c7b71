#pragma once

#include <vector>

#include "susp/vec3.hpp"

namespace susp {

// Gauss-Legendre nodes and weights on [-1, 1], n-point rule (exact for degree 2n-1).
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussLegendre gauss_legendre(int n);

// Quadrature on the unit sphere. Product rule: Gauss-Legendre in cos(theta) times a
// uniform azimuth grid, which integrates every spherical polynomial of total degree
// <= order exactly. Deterministic for a given order.
struct SphereQuadrature {
    std::vector<Vec3> nodes;     // points on |x| = 1
    std::vector<double> weights; // positive, sum = 4*pi
    int order = 0;

    std::size_t size() const { return nodes.size(); }
};

// order >= 2 required (smaller rules cannot even integrate x (x) x exactly).
SphereQuadrature sphere_quadrature(int order);

// Quadrature over the unit ball, radial Gauss-Legendre times a sphere rule.
struct BallQuadrature {
    std::vector<Vec3> nodes;
    std::vector<double> weights; // sum = 4*pi/3

    std::size_t size() const { return nodes.size(); }
};
BallQuadrature ball_quadrature(int radial_order, int sphere_order);

}  // namespace susp
