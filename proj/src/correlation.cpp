#include "susp/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace susp {

CorrelationEstimate estimate_g2(const std::vector<PointConfiguration>& configs,
                                const std::vector<double>& bin_edges) {
    if (configs.empty()) throw std::invalid_argument("estimate_g2: empty ensemble");
    if (bin_edges.size() < 2) throw std::invalid_argument("estimate_g2: need at least one bin");
    for (std::size_t k = 0; k + 1 < bin_edges.size(); ++k)
        if (!(bin_edges[k + 1] > bin_edges[k]) || bin_edges[k] < 0.0)
            throw std::invalid_argument("estimate_g2: bins must be increasing with positive width");

    const std::size_t nb = bin_edges.size() - 1;
    const double r_max = bin_edges.back();

    CorrelationEstimate est;
    est.bin_edges = bin_edges;
    est.g2.assign(nb, 0.0);
    est.g2_stderr.assign(nb, 0.0);
    est.pair_counts.assign(nb, 0.0);
    est.ensemble_size = configs.size();
    est.hardcore_r0 = configs.front().hardcore_r0;

    std::vector<double> shell_vol(nb);
    for (std::size_t k = 0; k < nb; ++k)
        shell_vol[k] = 4.0 / 3.0 * std::numbers::pi *
                       (std::pow(bin_edges[k + 1], 3) - std::pow(bin_edges[k], 3));

    std::vector<std::vector<double>> per_config(nb);
    double mean_intensity = 0.0;
    std::vector<double> counts(nb);
    std::vector<double> n_ref(nb);

    for (const auto& config : configs) {
        const double vol = config.domain.volume();
        const double rho = static_cast<double>(config.centers.size()) / vol;
        mean_intensity += rho / configs.size();
        std::fill(counts.begin(), counts.end(), 0.0);
        std::fill(n_ref.begin(), n_ref.end(), 0.0);

        for (std::size_t i = 0; i < config.centers.size(); ++i) {
            const double bdist = config.domain.boundary_distance(config.centers[i]);
            // eligible as reference point for every bin with outer edge <= bdist
            std::size_t k_max = 0;
            while (k_max < nb && bin_edges[k_max + 1] <= bdist) ++k_max;
            if (k_max == 0) continue;
            for (std::size_t k = 0; k < k_max; ++k) n_ref[k] += 1.0;
            for (std::size_t j = 0; j < config.centers.size(); ++j) {
                if (j == i) continue;
                const double r = (config.centers[i] - config.centers[j]).norm();
                if (r >= r_max || r < bin_edges.front()) continue;
                const std::size_t k =
                    std::upper_bound(bin_edges.begin(), bin_edges.end(), r) - bin_edges.begin() - 1;
                if (k < k_max) counts[k] += 1.0;
            }
        }
        for (std::size_t k = 0; k < nb; ++k) {
            est.pair_counts[k] += counts[k];
            if (n_ref[k] > 0.0 && rho > 0.0)
                per_config[k].push_back(counts[k] / (n_ref[k] * rho * shell_vol[k]));
        }
    }

    est.intensity = mean_intensity;
    for (std::size_t k = 0; k < nb; ++k) {
        const auto& vals = per_config[k];
        if (vals.empty()) continue;
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= vals.size();
        est.g2[k] = mean;
        if (vals.size() > 1) {
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            var /= (vals.size() - 1);
            est.g2_stderr[k] = std::sqrt(var / vals.size());
        }
    }
    return est;
}

G3SliceEstimate estimate_g3_slice(const std::vector<PointConfiguration>& configs,
                                  const std::vector<double>& bin_edges, G3Slice slice,
                                  double cos_window) {
    if (configs.empty()) throw std::invalid_argument("estimate_g3_slice: empty ensemble");
    if (bin_edges.size() < 2) throw std::invalid_argument("estimate_g3_slice: need bins");
    const std::size_t nb = bin_edges.size() - 1;
    const double r_max = bin_edges.back();
    // angular acceptance: cos(theta) within the window around the slice direction
    const double cos_center = slice == G3Slice::Collinear ? -1.0 : 0.5;
    const double cos_lo = std::max(-1.0, cos_center - cos_window);
    const double cos_hi = std::min(1.0, cos_center + cos_window);
    const double angular_fraction = 0.5 * (cos_hi - cos_lo);

    std::vector<double> shell_vol(nb);
    for (std::size_t k = 0; k < nb; ++k)
        shell_vol[k] = 4.0 / 3.0 * std::numbers::pi *
                       (std::pow(bin_edges[k + 1], 3) - std::pow(bin_edges[k], 3));

    G3SliceEstimate est;
    est.bin_edges = bin_edges;
    est.slice = slice;
    est.cos_window = cos_window;
    est.ensemble_size = configs.size();
    est.g3.assign(nb * nb, 0.0);
    est.g3_stderr.assign(nb * nb, 0.0);
    est.counts.assign(nb * nb, 0.0);

    std::vector<std::vector<double>> per_config(nb * nb);
    std::vector<double> counts(nb * nb);
    std::vector<std::size_t> nbr;
    std::vector<double> nbr_r;

    for (const auto& config : configs) {
        const double rho = static_cast<double>(config.centers.size()) / config.domain.volume();
        std::fill(counts.begin(), counts.end(), 0.0);
        double n_ref = 0.0;
        for (std::size_t i = 0; i < config.centers.size(); ++i) {
            if (config.domain.boundary_distance(config.centers[i]) < r_max) continue;
            n_ref += 1.0;
            nbr.clear();
            nbr_r.clear();
            for (std::size_t j = 0; j < config.centers.size(); ++j) {
                if (j == i) continue;
                const double r = (config.centers[j] - config.centers[i]).norm();
                if (r >= bin_edges.front() && r < r_max) {
                    nbr.push_back(j);
                    nbr_r.push_back(r);
                }
            }
            for (std::size_t a = 0; a < nbr.size(); ++a)
                for (std::size_t b = 0; b < nbr.size(); ++b) {
                    if (a == b) continue;
                    const Vec3 u = config.centers[nbr[a]] - config.centers[i];
                    const Vec3 v = config.centers[nbr[b]] - config.centers[i];
                    const double c = u.dot(v) / (nbr_r[a] * nbr_r[b]);
                    if (c < cos_lo || c > cos_hi) continue;
                    const std::size_t ka =
                        std::upper_bound(bin_edges.begin(), bin_edges.end(), nbr_r[a]) -
                        bin_edges.begin() - 1;
                    const std::size_t kb =
                        std::upper_bound(bin_edges.begin(), bin_edges.end(), nbr_r[b]) -
                        bin_edges.begin() - 1;
                    counts[ka * nb + kb] += 1.0;
                }
        }
        if (n_ref == 0.0 || rho == 0.0) continue;
        for (std::size_t k = 0; k < nb * nb; ++k) {
            est.counts[k] += counts[k];
            const double denom =
                n_ref * rho * rho * shell_vol[k / nb] * shell_vol[k % nb] * angular_fraction;
            per_config[k].push_back(counts[k] / denom);
        }
    }

    for (std::size_t k = 0; k < nb * nb; ++k) {
        const auto& vals = per_config[k];
        if (vals.empty()) continue;
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= vals.size();
        est.g3[k] = mean;
        if (vals.size() > 1) {
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            est.g3_stderr[k] = std::sqrt(var / (vals.size() - 1) / vals.size());
        }
    }
    return est;
}

H3Report check_h3_factorization(const std::vector<PointConfiguration>& configs,
                                const std::vector<double>& bin_edges, double cos_window,
                                double min_counts) {
    const G3SliceEstimate g3 = estimate_g3_slice(configs, bin_edges, G3Slice::Collinear, cos_window);
    const CorrelationEstimate g2 = estimate_g2(configs, bin_edges);
    const std::size_t nb = g3.nbins();
    H3Report rep;
    rep.g3_over_g2g2.assign(nb * nb, 0.0);
    for (std::size_t a = 0; a < nb; ++a)
        for (std::size_t b = 0; b < nb; ++b) {
            if (g3.counts[a * nb + b] < min_counts) continue;
            const double expect = g2.g2[a] * g2.g2[b];
            if (expect <= 0.0) continue;
            const double sigma = std::sqrt(
                g3.stderr_at(a, b) * g3.stderr_at(a, b) +
                g2.g2[b] * g2.g2[b] * g2.g2_stderr[a] * g2.g2_stderr[a] +
                g2.g2[a] * g2.g2[a] * g2.g2_stderr[b] * g2.g2_stderr[b]);
            if (sigma == 0.0) continue;
            rep.g3_over_g2g2[a * nb + b] = g3.at(a, b) / expect;
            rep.worst_z = std::max(rep.worst_z, std::abs(g3.at(a, b) - expect) / sigma);
            ++rep.pairs_checked;
        }
    rep.sufficient_data = rep.pairs_checked > 0;
    return rep;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("loglog_slope: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

DecorrelationReport check_decorrelation(const CorrelationEstimate& est, DecayFamily family,
                                        const DecorrelationParams& params) {
    DecorrelationReport rep;
    rep.family = family;

    double tail_start = params.tail_start;
    if (tail_start <= 0.0)
        tail_start = est.hardcore_r0 > 0.0 ? est.hardcore_r0 : est.bin_edges.front();

    std::vector<double> r, dev, floor_k, width;
    for (std::size_t k = 0; k < est.nbins(); ++k) {
        const double c = est.bin_center(k);
        if (c < tail_start) continue;
        r.push_back(c);
        dev.push_back(std::abs(est.g2[k] - 1.0));
        floor_k.push_back(params.noise_sigma * est.g2_stderr[k]);
        width.push_back(est.bin_edges[k + 1] - est.bin_edges[k]);
    }
    if (r.size() < 4) {
        rep.message = "insufficient tail bins";
        return rep;
    }
    rep.sufficient_data = true;

    // integrability proxy and its two-half convergence heuristic
    double first_half = 0.0, second_half = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        const double term = std::pow(dev[k], params.q) * r[k] * r[k] * width[k];
        (k < r.size() / 2 ? first_half : second_half) += term;
    }
    rep.lq_proxy = first_half + second_half;
    rep.lq_converged = second_half <= 0.5 * first_half || rep.lq_proxy == 0.0;

    // compact support: last bin with signal above the noise floor
    std::size_t last_signal = 0;
    bool any_signal = false;
    for (std::size_t k = 0; k < r.size(); ++k)
        if (dev[k] > floor_k[k]) { last_signal = k; any_signal = true; }
    if (!any_signal) {
        rep.compact_detected = true;
        rep.compact_range = tail_start;  // already below noise everywhere
    } else if (last_signal + 1 < r.size()) {
        rep.compact_detected = true;
        rep.compact_range = r[last_signal] + 0.5 * width[last_signal];
    }

    if (family == DecayFamily::Exponential || family == DecayFamily::Power) {
        std::vector<double> fx, fy;
        for (std::size_t k = 0; k < r.size(); ++k)
            if (dev[k] > floor_k[k] && dev[k] > 0.0) {
                fx.push_back(family == DecayFamily::Exponential ? r[k] : std::log(r[k]));
                fy.push_back(std::log(dev[k]));
            }
        rep.bins_used = fx.size();
        if (fx.size() < 3) {
            rep.message = "too few bins above the noise floor for a fit";
            return rep;
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(fx.size());
        for (std::size_t i = 0; i < fx.size(); ++i) {
            sx += fx[i]; sy += fy[i]; sxx += fx[i] * fx[i]; sxy += fx[i] * fy[i];
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double intercept = (sy - slope * sx) / n;
        rep.fitted_amplitude = std::exp(intercept);
        if (family == DecayFamily::Exponential)
            rep.fitted_rate = -slope;
        else
            rep.fitted_exponent = -slope;
    }
    return rep;
}

}  // namespace susp
