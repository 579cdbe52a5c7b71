#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "susp/rng.hpp"
#include "susp/vec3.hpp"

namespace susp {

// Sampling window, centered at the origin. The ball matches the finite-N geometry
// (radius L = N^(1/3)); the box variant exists for sub-window estimator checks.
struct Domain {
    enum class Kind { Ball, Box };
    Kind kind = Kind::Ball;
    double radius = 0.0;  // ball
    Vec3 half;            // box half-extents

    static Domain ball(double radius_) { return {Kind::Ball, radius_, {}}; }
    static Domain box(const Vec3& half_) { return {Kind::Box, 0.0, half_}; }

    double volume() const;
    bool contains(const Vec3& x) const;
    double boundary_distance(const Vec3& x) const;  // distance to the complement
    Vec3 sample_uniform(RngStream& rng) const;
};

struct PointConfiguration {
    std::vector<Vec3> centers;
    Domain domain;
    double hardcore_r0 = 0.0;  // > 0 once the configuration is hardcore-valid
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

// Homogeneous Poisson process on the domain: Poisson count with mean
// intensity * |domain|, i.i.d. uniform locations. Deterministic in (seed, stream).
PointConfiguration poisson_sample(double intensity, const Domain& domain,
                                  std::uint64_t seed, std::uint64_t stream = 0);

// Matern type-I thinning: retains exactly the points with no neighbor closer than
// r0 in the input configuration. Output is hardcore-valid at r0.
PointConfiguration matern1_thin(const PointConfiguration& points, double r0);

// Stationary Matern-I sample on the domain: the Poisson parent is drawn on the
// domain grown by r0, thinned with full deletion neighborhoods, then cropped.
// Plain thinning of a windowed sample under-deletes near the boundary (outside
// neighbors are missing), inflating the retained intensity there.
PointConfiguration matern1_sample(double lambda, const Domain& domain, double r0,
                                  std::uint64_t seed, std::uint64_t stream = 0);

struct H1Report {
    bool ok = true;
    double min_distance = 0.0;  // over all pairs; +inf for n < 2
    std::vector<std::pair<std::size_t, std::size_t>> violations;
};

// Hardcore check: true iff the minimal pairwise distance is >= r0. Grid-accelerated,
// expected O(n); every offending pair is listed.
H1Report check_h1(const PointConfiguration& config, double r0);

// Retained intensity of Matern-I thinning applied to a Poisson process of the given
// intensity: lambda * exp(-lambda * (4/3) pi r0^3).
double matern1_retained_intensity(double lambda, double r0);

// Inverse of the above: the Poisson intensity whose Matern-I thinning has the target
// retained intensity (Newton; requires target below the achievable maximum).
double matern1_poisson_intensity_for(double retained, double r0);

// Classical pair correlation of the Matern-I process: 0 below r0,
// exp(lambda * V_int(r)) up to 2 r0, exactly 1 beyond.
double matern1_pair_correlation(double r, double lambda, double r0);

// Volume fraction <-> number intensity, rho1 = (3 / 4 pi) phi for unit spheres.
double intensity_from_phi(double phi);
double phi_from_intensity(double rho);

// Line-oriented text format: header with the domain, r0, seed; one center per line.
void save_configuration(std::ostream& os, const PointConfiguration& config);
PointConfiguration load_configuration(std::istream& is);

}  // namespace susp
