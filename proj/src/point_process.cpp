#include "susp/point_process.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace susp {

namespace {

// Uniform grid over the domain bounding box with cell size >= r_cell; neighbor
// queries only touch the 27 surrounding cells.
class CellGrid {
  public:
    CellGrid(const std::vector<Vec3>& pts, double r_cell) : pts_(pts), r_(r_cell) {
        lo_ = {1e300, 1e300, 1e300};
        Vec3 hi = {-1e300, -1e300, -1e300};
        for (const auto& p : pts) {
            for (int c = 0; c < 3; ++c) {
                lo_[c] = std::min(lo_[c], p[c]);
                hi[c] = std::max(hi[c], p[c]);
            }
        }
        if (pts.empty()) lo_ = hi = Vec3{};
        for (int c = 0; c < 3; ++c) n_[c] = std::max<std::int64_t>(1, static_cast<std::int64_t>((hi[c] - lo_[c]) / r_) + 1);
        cells_.resize(static_cast<std::size_t>(n_[0] * n_[1] * n_[2]));
        for (std::size_t i = 0; i < pts.size(); ++i) cells_[cell_of(pts[i])].push_back(i);
    }

    template <class F>
    void for_neighbors(const Vec3& p, F&& f) const {
        std::int64_t ix[3];
        index_of(p, ix);
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy)
                for (std::int64_t dz = -1; dz <= 1; ++dz) {
                    const std::int64_t cx = ix[0] + dx, cy = ix[1] + dy, cz = ix[2] + dz;
                    if (cx < 0 || cy < 0 || cz < 0 || cx >= n_[0] || cy >= n_[1] || cz >= n_[2]) continue;
                    for (std::size_t j : cells_[static_cast<std::size_t>((cx * n_[1] + cy) * n_[2] + cz)]) f(j);
                }
    }

  private:
    void index_of(const Vec3& p, std::int64_t ix[3]) const {
        for (int c = 0; c < 3; ++c)
            ix[c] = std::clamp<std::int64_t>(static_cast<std::int64_t>((p[c] - lo_[c]) / r_), 0, n_[c] - 1);
    }
    std::size_t cell_of(const Vec3& p) const {
        std::int64_t ix[3];
        index_of(p, ix);
        return static_cast<std::size_t>((ix[0] * n_[1] + ix[1]) * n_[2] + ix[2]);
    }
    const std::vector<Vec3>& pts_;
    double r_;
    Vec3 lo_;
    std::int64_t n_[3] = {1, 1, 1};
    std::vector<std::vector<std::size_t>> cells_;
};

}  // namespace

double Domain::volume() const {
    if (kind == Kind::Ball) return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
    return 8.0 * half.x * half.y * half.z;
}

bool Domain::contains(const Vec3& x) const {
    if (kind == Kind::Ball) return x.norm() <= radius;
    return std::abs(x.x) <= half.x && std::abs(x.y) <= half.y && std::abs(x.z) <= half.z;
}

double Domain::boundary_distance(const Vec3& x) const {
    if (kind == Kind::Ball) return radius - x.norm();
    double d = std::numeric_limits<double>::infinity();
    d = std::min(d, half.x - std::abs(x.x));
    d = std::min(d, half.y - std::abs(x.y));
    d = std::min(d, half.z - std::abs(x.z));
    return d;
}

Vec3 Domain::sample_uniform(RngStream& rng) const {
    if (kind == Kind::Ball) {
        for (;;) {  // rejection from the bounding cube
            const Vec3 x{radius * (2.0 * rng.next_double() - 1.0),
                         radius * (2.0 * rng.next_double() - 1.0),
                         radius * (2.0 * rng.next_double() - 1.0)};
            if (x.norm2() <= radius * radius) return x;
        }
    }
    return {half.x * (2.0 * rng.next_double() - 1.0),
            half.y * (2.0 * rng.next_double() - 1.0),
            half.z * (2.0 * rng.next_double() - 1.0)};
}

PointConfiguration poisson_sample(double intensity, const Domain& domain,
                                  std::uint64_t seed, std::uint64_t stream) {
    if (!(intensity > 0.0)) throw std::invalid_argument("poisson_sample: intensity must be positive");
    const double vol = domain.volume();
    if (!(vol > 0.0) || !std::isfinite(vol)) throw std::invalid_argument("poisson_sample: unbounded domain");
    RngStream rng(seed, stream);
    const std::uint64_t n = rng.next_poisson(intensity * vol);
    PointConfiguration config;
    config.domain = domain;
    config.seed = seed;
    config.stream = stream;
    config.centers.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) config.centers.push_back(domain.sample_uniform(rng));
    return config;
}

PointConfiguration matern1_thin(const PointConfiguration& points, double r0) {
    PointConfiguration out;
    out.domain = points.domain;
    out.seed = points.seed;
    out.stream = points.stream;
    out.hardcore_r0 = r0;
    if (points.centers.empty()) return out;

    const CellGrid grid(points.centers, r0);
    const double r2 = r0 * r0;
    for (std::size_t i = 0; i < points.centers.size(); ++i) {
        bool isolated = true;
        grid.for_neighbors(points.centers[i], [&](std::size_t j) {
            if (j != i && (points.centers[i] - points.centers[j]).norm2() < r2) isolated = false;
        });
        if (isolated) out.centers.push_back(points.centers[i]);
    }
    return out;
}

PointConfiguration matern1_sample(double lambda, const Domain& domain, double r0,
                                  std::uint64_t seed, std::uint64_t stream) {
    Domain grown = domain;
    if (grown.kind == Domain::Kind::Ball)
        grown.radius += r0;
    else
        grown.half += Vec3{r0, r0, r0};
    const PointConfiguration thinned = matern1_thin(poisson_sample(lambda, grown, seed, stream), r0);
    PointConfiguration out;
    out.domain = domain;
    out.hardcore_r0 = r0;
    out.seed = seed;
    out.stream = stream;
    for (const auto& c : thinned.centers)
        if (domain.contains(c)) out.centers.push_back(c);
    return out;
}

H1Report check_h1(const PointConfiguration& config, double r0) {
    H1Report rep;
    rep.min_distance = std::numeric_limits<double>::infinity();
    if (config.centers.size() < 2) return rep;
    const CellGrid grid(config.centers, r0);
    const double r2 = r0 * r0;
    for (std::size_t i = 0; i < config.centers.size(); ++i) {
        grid.for_neighbors(config.centers[i], [&](std::size_t j) {
            if (j <= i) return;
            const double d2 = (config.centers[i] - config.centers[j]).norm2();
            if (d2 < r2) rep.violations.emplace_back(i, j);
        });
    }
    // min distance is only exact inside the grid radius; refine over violations and
    // a direct pass when the set is small.
    if (config.centers.size() <= 4096) {
        for (std::size_t i = 0; i < config.centers.size(); ++i)
            for (std::size_t j = i + 1; j < config.centers.size(); ++j)
                rep.min_distance = std::min(rep.min_distance,
                                            (config.centers[i] - config.centers[j]).norm());
    } else {
        for (const auto& [i, j] : rep.violations)
            rep.min_distance = std::min(rep.min_distance,
                                        (config.centers[i] - config.centers[j]).norm());
        if (rep.violations.empty()) rep.min_distance = r0;  // lower bound certificate
    }
    rep.ok = rep.violations.empty();
    return rep;
}

double matern1_retained_intensity(double lambda, double r0) {
    return lambda * std::exp(-lambda * 4.0 / 3.0 * std::numbers::pi * r0 * r0 * r0);
}

double matern1_poisson_intensity_for(double retained, double r0) {
    const double v = 4.0 / 3.0 * std::numbers::pi * r0 * r0 * r0;
    const double max_retained = std::exp(-1.0) / v;
    if (!(retained > 0.0) || retained >= max_retained)
        throw std::invalid_argument("matern1_poisson_intensity_for: target not achievable");
    double lambda = retained;
    for (int it = 0; it < 100; ++it) {
        const double f = lambda * std::exp(-lambda * v) - retained;
        const double df = std::exp(-lambda * v) * (1.0 - lambda * v);
        const double step = f / df;
        lambda -= step;
        if (std::abs(step) < 1e-15 * lambda) break;
    }
    return lambda;
}

double matern1_pair_correlation(double r, double lambda, double r0) {
    if (r < r0) return 0.0;
    if (r >= 2.0 * r0) return 1.0;
    const double v_int = std::numbers::pi / 12.0 * (4.0 * r0 + r) * (2.0 * r0 - r) * (2.0 * r0 - r);
    return std::exp(lambda * v_int);
}

double intensity_from_phi(double phi) { return 3.0 / (4.0 * std::numbers::pi) * phi; }
double phi_from_intensity(double rho) { return 4.0 * std::numbers::pi / 3.0 * rho; }

namespace {
void write_double(std::ostream& os, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
}
}  // namespace

void save_configuration(std::ostream& os, const PointConfiguration& config) {
    os << "# suspvisc point configuration v1\n";
    if (config.domain.kind == Domain::Kind::Ball) {
        os << "domain ball ";
        write_double(os, config.domain.radius);
        os << "\n";
    } else {
        os << "domain box ";
        write_double(os, config.domain.half.x); os << " ";
        write_double(os, config.domain.half.y); os << " ";
        write_double(os, config.domain.half.z); os << "\n";
    }
    os << "r0 "; write_double(os, config.hardcore_r0); os << "\n";
    os << "seed " << config.seed << " " << config.stream << "\n";
    os << "count " << config.centers.size() << "\n";
    for (const auto& c : config.centers) {
        write_double(os, c.x); os << " ";
        write_double(os, c.y); os << " ";
        write_double(os, c.z); os << "\n";
    }
}

PointConfiguration load_configuration(std::istream& is) {
    PointConfiguration config;
    std::string line;
    std::size_t count = 0;
    bool have_domain = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "domain") {
            std::string kind;
            ls >> kind;
            if (kind == "ball") {
                double r; ls >> r;
                config.domain = Domain::ball(r);
            } else if (kind == "box") {
                Vec3 h; ls >> h.x >> h.y >> h.z;
                config.domain = Domain::box(h);
            } else {
                throw std::runtime_error("load_configuration: unknown domain kind " + kind);
            }
            have_domain = true;
        } else if (key == "r0") {
            ls >> config.hardcore_r0;
        } else if (key == "seed") {
            ls >> config.seed >> config.stream;
        } else if (key == "count") {
            ls >> count;
            config.centers.reserve(count);
            break;
        } else {
            throw std::runtime_error("load_configuration: unknown header key " + key);
        }
    }
    if (!have_domain) throw std::runtime_error("load_configuration: missing domain header");
    Vec3 c;
    while (config.centers.size() < count && (is >> c.x >> c.y >> c.z)) config.centers.push_back(c);
    if (config.centers.size() != count) throw std::runtime_error("load_configuration: truncated file");
    return config;
}

}  // namespace susp
