#pragma once

#include <functional>
#include <string>
#include <vector>

#include "susp/point_process.hpp"

namespace susp {

// Binned radial estimate of the pair correlation g2, normalized by intensity^2,
// with per-bin counts and ensemble spread.
struct CorrelationEstimate {
    std::vector<double> bin_edges;  // size nbins + 1, increasing, positive width
    std::vector<double> g2;         // ensemble mean per bin
    std::vector<double> g2_stderr;  // stddev of per-configuration values / sqrt(m)
    std::vector<double> pair_counts;
    std::size_t ensemble_size = 0;
    double intensity = 0.0;         // mean estimated intensity
    double hardcore_r0 = 0.0;

    std::size_t nbins() const { return g2.size(); }
    double bin_center(std::size_t k) const { return 0.5 * (bin_edges[k] + bin_edges[k + 1]); }
};

// Pair-count estimator with minus-sampling border correction: a point is a reference
// for bin k only if its distance to the domain boundary exceeds the bin's outer edge.
CorrelationEstimate estimate_g2(const std::vector<PointConfiguration>& configs,
                                const std::vector<double>& bin_edges);

enum class DecayFamily { Compact, Exponential, Power };

struct DecorrelationReport {
    bool sufficient_data = false;
    DecayFamily family = DecayFamily::Compact;
    // Compact: smallest radius beyond which |g2 - 1| stays below the noise floor.
    double compact_range = 0.0;
    bool compact_detected = false;
    // Exponential: |g2-1| ~ A exp(-rate r). Power: |g2-1| ~ A r^-exponent.
    double fitted_amplitude = 0.0;
    double fitted_rate = 0.0;
    double fitted_exponent = 0.0;
    std::size_t bins_used = 0;
    // L^q integrability proxy: sum |g2-1|^q r^2 dr over the tail, with a convergence
    // heuristic comparing the two halves of the tail.
    double lq_proxy = 0.0;
    bool lq_converged = false;
    std::string message;
};

struct DecorrelationParams {
    double tail_start = 0.0;       // 0: start after the hardcore radius (or first bin)
    double q = 2.0;                // exponent of the integrability proxy
    double noise_sigma = 3.0;      // floor = noise_sigma * stderr
};

// Fits the tail of |g2 - 1| against the requested decay family and reports the
// integrability proxy. Insufficient tail data is reported, not thrown.
DecorrelationReport check_decorrelation(const CorrelationEstimate& est, DecayFamily family,
                                        const DecorrelationParams& params = {});

// Least-squares slope of log(y) against log(x); shared by the scaling diagnostics.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Three-point correlation on fixed triangle slices, parameterized by the two leg
// lengths from the reference point and an angular window: Collinear puts the legs
// on opposite rays (third side = sum of the legs), Equilateral puts them at 60
// degrees. Used to sanity-check the factorization g3(0,y,z) ~ g2(y) g2(z) once the
// legs' endpoints decorrelate.
enum class G3Slice { Collinear, Equilateral };

struct G3SliceEstimate {
    std::vector<double> bin_edges;   // shared shell edges for both legs
    std::vector<double> g3;          // flattened [a * nbins + b]
    std::vector<double> g3_stderr;
    std::vector<double> counts;
    G3Slice slice = G3Slice::Collinear;
    double cos_window = 0.0;
    std::size_t ensemble_size = 0;

    std::size_t nbins() const { return bin_edges.size() - 1; }
    double at(std::size_t a, std::size_t b) const { return g3[a * nbins() + b]; }
    double stderr_at(std::size_t a, std::size_t b) const { return g3_stderr[a * nbins() + b]; }
};

G3SliceEstimate estimate_g3_slice(const std::vector<PointConfiguration>& configs,
                                  const std::vector<double>& bin_edges, G3Slice slice,
                                  double cos_window = 0.2);

// Runnable three-point factorization check: on the opposite-ray slice the third
// side exceeds the sum of the legs, so once that exceeds the correlation range
// g3(0,y,z) should match g2(|y|) g2(|z|). Reports the worst z-score over the bin
// pairs with enough counts; no threshold is attached by the check itself.
struct H3Report {
    bool sufficient_data = false;
    double worst_z = 0.0;
    std::size_t pairs_checked = 0;
    std::vector<double> g3_over_g2g2;  // flattened ratio table, 0 where undefined
};

H3Report check_h3_factorization(const std::vector<PointConfiguration>& configs,
                                const std::vector<double>& bin_edges,
                                double cos_window = 0.3, double min_counts = 50.0);

}  // namespace susp
