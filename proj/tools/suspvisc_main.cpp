// Command-line driver: coefficient tables, scaling studies, point-process
// validation, and result serialization (CSV + JSON with a schema version and the
// full resolved configuration echoed into every artifact).

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include <algorithm>

#include "susp/effective_viscosity.hpp"
#include "susp/single_sphere.hpp"

using json = nlohmann::ordered_json;
using namespace susp;

namespace {

constexpr const char* kSchemaVersion = "suspvisc-1";

std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

// Flat key = value configuration file with optional [section] headers; a section
// turns "key" into "section.key". Unknown keys are an error, not ignored.
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::map<std::string, std::string> kv;
    std::string line, section;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("config line without '=': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        kv[section.empty() ? key : section + "." + key] = val;
    }
    return kv;
}

// g2 estimate CSV written by the pointprocess command
CorrelationEstimate load_g2_csv(const std::string& path, double hardcore_r0) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open g2 file " + path);
    CorrelationEstimate est;
    est.hardcore_r0 = hardcore_r0;
    est.ensemble_size = 1;
    std::string line;
    if (!std::getline(in, line) || line.rfind("bin_lo,", 0) != 0)
        throw std::runtime_error("g2 file: expected header bin_lo,bin_hi,...");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != 6) throw std::runtime_error("g2 file: expected 6 columns");
        if (est.bin_edges.empty()) est.bin_edges.push_back(row[0]);
        est.bin_edges.push_back(row[1]);
        est.g2.push_back(row[3]);
        est.g2_stderr.push_back(row[4]);
        est.pair_counts.push_back(row[5]);
    }
    if (est.g2.empty()) throw std::runtime_error("g2 file: no bins");
    return est;
}

struct OutputPaths {
    std::string dir = ".";
    std::string stem = "suspvisc";

    std::string path(const std::string& suffix) const {
        return (std::filesystem::path(dir) / (stem + suffix)).string();
    }
};

void ensure_dir(const std::string& dir) {
    if (!dir.empty() && dir != ".") std::filesystem::create_directories(dir);
}

json matrix_to_json(const ViscTensor& t) {
    json rows = json::array();
    for (int i = 0; i < 5; ++i) {
        json row = json::array();
        for (int j = 0; j < 5; ++j) row.push_back(t(i, j));
        rows.push_back(row);
    }
    return rows;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

struct CommonOpts {
    std::string config_file;
    std::string out_dir = ".";
    int threads = 1;
    bool strict = false;
};

// echoed into every artifact
json echo_common(const CommonOpts& c, const std::string& command) {
    json j;
    j["schema"] = kSchemaVersion;
    j["command"] = command;
    j["threads"] = c.threads;
    j["strict"] = c.strict;
    j["out_dir"] = c.out_dir;
    return j;
}

int run_validate(const CommonOpts& common, const std::string& out_stem) {
    using std::numbers::pi;
    int failures = 0;
    std::ostringstream report;
    const auto line = [&](const std::string& name, bool ok, double value, double bound) {
        report << (ok ? "PASS " : "FAIL ") << name << "  value=" << fmt_double(value)
               << "  bound=" << fmt_double(bound) << "\n";
        if (!ok) ++failures;
    };

    // sigma(Phi0, P0) n = 3 S x on the unit sphere
    RngStream rng(321, 0);
    double worst = 0;
    for (int t = 0; t < 1000; ++t) {
        Vec3 x{2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0,
               2.0 * rng.next_double() - 1.0};
        if (x.norm() < 1e-3) continue;
        x = x / x.norm();
        Mat3 m;
        for (int i = 0; i < 9; ++i) m.a[i] = 2.0 * rng.next_double() - 1.0;
        const StrainTensor s = sym_trace_free_project(m);
        const Vec3 direct = boundary_stress_from_derivatives(x, s);
        const Vec3 exact = s.apply(x) * 3.0;
        worst = std::max(worst, (direct - exact).norm());
    }
    line("boundary-stress 3Sx identity", worst < 1e-10, worst, 1e-10);

    const SphereQuadrature quad = sphere_quadrature(20);
    const StrainTensor s0 = strain_basis()[0];
    const double functional = single_sphere_functional(s0, quad) / s0.norm2();
    line("surface functional 20pi/3", std::abs(functional - 20.0 * pi / 3.0) < 1e-6, functional,
         20.0 * pi / 3.0);

    const double ein = einstein_coefficient();
    line("Einstein coefficient 5/2", std::abs(ein - 2.5) < 1e-8, ein, 2.5);

    std::cout << report.str();
    json j = echo_common(common, "validate");
    j["failures"] = failures;
    j["report"] = report.str();
    OutputPaths paths{common.out_dir, out_stem};
    write_text(paths.path("_validate.json"), j.dump(2) + "\n");
    return failures == 0 ? 0 : 1;
}

int run_mu2(const CommonOpts& common, const std::string& g2_kind, const std::string& g2_file,
            double r0, double n, double lambda, int radial_nodes, int sphere_order, bool use_mc,
            const std::string& out_stem) {
    Mu2Params params;
    params.r0 = r0;
    params.n = n;
    params.radial_nodes = radial_nodes;
    params.sphere_order = sphere_order;
    params.use_mc = use_mc;

    const auto t0 = std::chrono::steady_clock::now();
    Mu2Result mu2;
    Mu2Result nu2;
    if (g2_kind == "hardcore-uniform") {
        const auto g2 = [r0](double r) { return r < r0 ? 0.0 : 1.0; };
        mu2 = mu2_evaluate(g2, params);
        nu2 = nu2_evaluate(g2, params);
    } else if (g2_kind == "matern") {
        if (!(lambda > 0)) throw std::runtime_error("mu2: --lambda required for --g2 matern");
        const auto g2 = [=](double r) { return matern1_pair_correlation(r, lambda, r0); };
        mu2 = mu2_evaluate(g2, params);
        nu2 = nu2_evaluate(g2, params);
    } else if (g2_kind == "file") {
        const CorrelationEstimate est = load_g2_csv(g2_file, r0);
        mu2 = mu2_evaluate(est, params);
        const auto lookup = [est, r0](double r) -> double {
            if (r < est.bin_edges.front()) return r < r0 ? 0.0 : 1.0;
            if (r >= est.bin_edges.back()) return 1.0;
            const std::size_t k = std::upper_bound(est.bin_edges.begin(), est.bin_edges.end(), r) -
                                  est.bin_edges.begin() - 1;
            return est.g2[k];
        };
        nu2 = nu2_evaluate(lookup, params);
    } else {
        throw std::runtime_error("mu2: unknown --g2 kind " + g2_kind);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json j = echo_common(common, "mu2");
    j["inputs"] = {{"g2", g2_kind},       {"r0", r0},
                   {"n", n},              {"lambda", lambda},
                   {"radial_nodes", radial_nodes}, {"sphere_order", sphere_order},
                   {"use_mc", use_mc}};
    j["mu2"] = matrix_to_json(mu2.value);
    j["breakdown"] = {{"mean_field", matrix_to_json(mu2.mean_field)},
                      {"near_field", matrix_to_json(mu2.near_field)},
                      {"correlation", matrix_to_json(mu2.correlation)},
                      {"cavity_constant", mu2.cavity_constant},
                      {"shape_term_max_abs", mu2.shape_term_max_abs},
                      {"chi0_term_max_abs", mu2.chi0_term_max_abs}};
    j["nu2"] = matrix_to_json(nu2.value);
    j["errors"] = {{"quad_error", mu2.quad_error}, {"mc_error", mu2.mc_error}};
    j["runtime_seconds"] = seconds;

    OutputPaths paths{common.out_dir, out_stem};
    write_text(paths.path("_mu2.json"), j.dump(2) + "\n");

    // long-format CSV: quantity, i, j, value, error
    std::ostringstream csv;
    csv << "quantity,i,j,value,error\n";
    const auto emit = [&](const char* name, const ViscTensor& t, double err) {
        for (int i = 0; i < 5; ++i)
            for (int jj = 0; jj < 5; ++jj)
                csv << name << ',' << i << ',' << jj << ',' << fmt_double(t(i, jj)) << ','
                    << fmt_double(err) << "\n";
    };
    emit("mu2", mu2.value, mu2.quad_error + mu2.mc_error);
    emit("mu2_mean_field", mu2.mean_field, 0.0);
    emit("mu2_near_field", mu2.near_field, mu2.quad_error);
    emit("mu2_correlation", mu2.correlation, mu2.quad_error + mu2.mc_error);
    emit("nu2", nu2.value, nu2.quad_error);
    write_text(paths.path("_mu2.csv"), csv.str());

    std::cout << "mu2 diag = [" << fmt_double(mu2.value(0, 0)) << ", " << fmt_double(mu2.value(1, 1))
              << ", " << fmt_double(mu2.value(2, 2)) << ", " << fmt_double(mu2.value(3, 3)) << ", "
              << fmt_double(mu2.value(4, 4)) << "]\n"
              << "nu2 diag ~ " << fmt_double(nu2.value(0, 0)) << " (cavity constant "
              << fmt_double(mu2.cavity_constant) << ")\n"
              << "wrote " << paths.path("_mu2.json") << " and " << paths.path("_mu2.csv") << "\n";
    if (common.strict && !mu2.converged) return 2;
    return 0;
}

int run_pair_table(const CommonOpts& common, double r_min, double r_max, int nodes,
                   int sphere_order, const std::string& out_stem) {
    const PairShellTable table(r_min, r_max, nodes, sphere_order);
    OutputPaths paths{common.out_dir, out_stem};
    std::ostringstream ss;
    table.save(ss);
    write_text(paths.path("_pair_table.txt"), ss.str());
    std::cout << "wrote " << paths.path("_pair_table.txt") << " (" << nodes << " nodes on ["
              << fmt_double(r_min) << ", " << fmt_double(r_max) << "])\n";
    return 0;
}

// H2 asks for an envelope of |g2 - 1| whose shape does not drift with the volume
// fraction; fitted envelopes across a lambda grid are reported side by side with
// no pass/fail threshold attached.
void report_envelope_grid(const std::string& grid_csv, double r0, int trials, double big_l,
                          std::uint64_t seed, json& j) {
    json rows = json::array();
    for (double lam : parse_grid(grid_csv)) {
        std::vector<PointConfiguration> ensemble;
        for (int t = 0; t < trials; ++t)
            ensemble.push_back(matern1_sample(lam, Domain::ball(big_l), r0, seed, t));
        std::vector<double> edges;
        const double width = r0 / 5.0;
        for (int k = 1; width * k < 4.0 * r0; ++k) edges.push_back(width * k);
        const CorrelationEstimate est = estimate_g2(ensemble, edges);
        DecorrelationParams dp;
        dp.noise_sigma = 4.0;
        const DecorrelationReport comp = check_decorrelation(est, DecayFamily::Compact, dp);
        const DecorrelationReport expo = check_decorrelation(est, DecayFamily::Exponential, dp);
        rows.push_back({{"lambda", lam},
                        {"phi", phi_from_intensity(matern1_retained_intensity(lam, r0))},
                        {"compact_range", comp.compact_range},
                        {"compact_detected", comp.compact_detected},
                        {"exp_rate", expo.fitted_rate},
                        {"exp_amplitude", expo.fitted_amplitude},
                        {"bins_used", expo.bins_used}});
        std::cout << "envelope at lambda " << fmt_double(lam) << ": compact range "
                  << fmt_double(comp.compact_range) << ", exp rate " << fmt_double(expo.fitted_rate)
                  << "\n";
    }
    j["envelope_grid"] = rows;
}

int run_pointprocess(const CommonOpts& common, double lambda, double r0, int trials, double big_l,
                     std::uint64_t seed, const std::string& lambda_grid,
                     const std::string& out_stem) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<PointConfiguration> ensemble;
    ensemble.reserve(trials);
    double retained = 0;
    bool hardcore_ok = true;
    for (int t = 0; t < trials; ++t) {
        ensemble.push_back(matern1_sample(lambda, Domain::ball(big_l), r0, seed, t));
        retained += static_cast<double>(ensemble.back().centers.size());
        hardcore_ok = hardcore_ok && check_h1(ensemble.back(), r0).ok;
    }
    const double vol = Domain::ball(big_l).volume();
    const double rho_hat = retained / trials / vol;
    const double rho_expect = matern1_retained_intensity(lambda, r0);
    const double sigma = std::sqrt(rho_expect / (vol * trials));

    std::vector<double> edges;
    const double width = r0 / 5.0;
    for (int k = 0; 2.0 * r0 + (k - 5) * width < 4.0 * r0; ++k) edges.push_back(width * k);
    // drop the leading zero-width guard and keep edges aligned with r0
    std::vector<double> clean;
    for (double e : edges)
        if (e > 1e-9) clean.push_back(e);
    const CorrelationEstimate est = estimate_g2(ensemble, clean);
    const DecorrelationReport rep = check_decorrelation(est, DecayFamily::Compact);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json j = echo_common(common, "pointprocess");
    j["inputs"] = {{"lambda", lambda}, {"r0", r0}, {"trials", trials}, {"L", big_l}, {"seed", seed}};
    j["hardcore_ok"] = hardcore_ok;
    j["retained_intensity"] = {{"estimate", rho_hat},
                               {"expected", rho_expect},
                               {"sigma", sigma},
                               {"phi", phi_from_intensity(rho_hat)}};
    j["decorrelation"] = {{"compact_detected", rep.compact_detected},
                          {"compact_range", rep.compact_range},
                          {"lq_proxy", rep.lq_proxy},
                          {"lq_converged", rep.lq_converged}};
    if (!lambda_grid.empty()) report_envelope_grid(lambda_grid, r0, trials / 2 + 1, big_l, seed + 1, j);

    // three-point factorization sanity check on the opposite-ray slice
    std::vector<double> tri_edges{r0, 1.5 * r0, 2.0 * r0};
    const H3Report h3 = check_h3_factorization(ensemble, tri_edges);
    j["h3_factorization"] = {{"sufficient_data", h3.sufficient_data},
                             {"worst_z", h3.worst_z},
                             {"pairs_checked", h3.pairs_checked}};
    if (h3.sufficient_data)
        std::cout << "h3 factorization worst |z| = " << fmt_double(h3.worst_z) << " over "
                  << h3.pairs_checked << " bin pairs\n";
    j["runtime_seconds"] = seconds;

    OutputPaths paths{common.out_dir, out_stem};
    write_text(paths.path("_pointprocess.json"), j.dump(2) + "\n");

    std::ostringstream csv;
    csv << "bin_lo,bin_hi,bin_center,g2,stderr,count\n";
    for (std::size_t k = 0; k < est.nbins(); ++k)
        csv << fmt_double(est.bin_edges[k]) << ',' << fmt_double(est.bin_edges[k + 1]) << ','
            << fmt_double(est.bin_center(k)) << ',' << fmt_double(est.g2[k]) << ','
            << fmt_double(est.g2_stderr[k]) << ',' << fmt_double(est.pair_counts[k]) << "\n";
    write_text(paths.path("_g2.csv"), csv.str());

    std::cout << "retained intensity " << fmt_double(rho_hat) << " (expected "
              << fmt_double(rho_expect) << " +- " << fmt_double(sigma) << "), hardcore "
              << (hardcore_ok ? "ok" : "VIOLATED") << "\n"
              << "g2 written to " << paths.path("_g2.csv") << "\n";
    if (common.strict && (!hardcore_ok || std::abs(rho_hat - rho_expect) > 3 * sigma)) return 2;
    return 0;
}

int run_finite_n(const CommonOpts& common, const std::string& phi_csv, double n_domain,
                 int ensemble, double r0, std::uint64_t seed, const std::string& out_stem) {
    EinsteinTrendParams params;
    params.n_domain = n_domain;
    params.ensemble = ensemble;
    params.r0 = r0;
    params.seed = seed;
    params.threads = common.threads;
    const StrainTensor s = strain_basis()[0];

    const auto t0 = std::chrono::steady_clock::now();
    const EinsteinTrendReport rep = einstein_trend(parse_grid(phi_csv), s, params);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json j = echo_common(common, "finite-n");
    j["inputs"] = {{"phi_grid", phi_csv}, {"n", n_domain},   {"ensemble", ensemble},
                   {"r0", r0},            {"seed", seed},    {"S_basis_index", 0}};
    j["slope"] = rep.slope;
    j["slope_stderr"] = rep.slope_stderr;
    j["slope_over_s2"] = rep.slope / rep.s_norm2;
    j["runtime_seconds"] = seconds;
    json rows = json::array();
    for (std::size_t i = 0; i < rep.phis.size(); ++i)
        rows.push_back({{"phi", rep.phis[i]},
                        {"mean_visc", rep.mean_visc[i]},
                        {"stderr", rep.stderr_visc[i]},
                        {"mean_spheres", rep.mean_spheres[i]}});
    j["points"] = rows;

    OutputPaths paths{common.out_dir, out_stem};
    write_text(paths.path("_finite_n.json"), j.dump(2) + "\n");

    std::ostringstream csv;
    csv << "phi,mean_visc,stderr,mean_spheres\n";
    for (std::size_t i = 0; i < rep.phis.size(); ++i)
        csv << fmt_double(rep.phis[i]) << ',' << fmt_double(rep.mean_visc[i]) << ','
            << fmt_double(rep.stderr_visc[i]) << ',' << fmt_double(rep.mean_spheres[i]) << "\n";
    write_text(paths.path("_finite_n.csv"), csv.str());

    std::cout << "Einstein slope = " << fmt_double(rep.slope / rep.s_norm2)
              << " x |S|^2 (target 2.5), stderr " << fmt_double(rep.slope_stderr / rep.s_norm2)
              << "\n";
    return 0;
}

int run_residual_scaling(const CommonOpts& common, const std::string& phi_csv, int spheres,
                         int ensemble, double r0, std::uint64_t seed,
                         const std::string& out_stem) {
    ResidualScalingParams params;
    params.target_spheres = spheres;
    params.ensemble = ensemble;
    params.r0 = r0;
    params.seed = seed;
    params.threads = common.threads;
    const StrainTensor s = strain_basis()[0];

    const auto t0 = std::chrono::steady_clock::now();
    const ResidualScalingReport rep = residual_diagnostics(parse_grid(phi_csv), s, params);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json j = echo_common(common, "residual-scaling");
    j["inputs"] = {{"phi_grid", phi_csv}, {"spheres", spheres}, {"ensemble", ensemble},
                   {"r0", r0},            {"seed", seed}};
    j["uerr_slope"] = rep.uerr_slope;
    j["phisum_slope"] = rep.phisum_slope;
    j["runtime_seconds"] = seconds;
    json rows = json::array();
    for (std::size_t i = 0; i < rep.phis.size(); ++i)
        rows.push_back({{"phi", rep.phis[i]},
                        {"uerr", rep.uerr_mean[i]},
                        {"uerr_stderr", rep.uerr_stderr[i]},
                        {"phisum", rep.phisum_mean[i]},
                        {"phisum_stderr", rep.phisum_stderr[i]},
                        {"mean_spheres", rep.mean_spheres[i]}});
    j["points"] = rows;

    OutputPaths paths{common.out_dir, out_stem};
    write_text(paths.path("_residual.json"), j.dump(2) + "\n");

    std::ostringstream csv;
    csv << "phi,uerr,uerr_stderr,phisum,phisum_stderr,mean_spheres\n";
    for (std::size_t i = 0; i < rep.phis.size(); ++i)
        csv << fmt_double(rep.phis[i]) << ',' << fmt_double(rep.uerr_mean[i]) << ','
            << fmt_double(rep.uerr_stderr[i]) << ',' << fmt_double(rep.phisum_mean[i]) << ','
            << fmt_double(rep.phisum_stderr[i]) << ',' << fmt_double(rep.mean_spheres[i]) << "\n";
    write_text(paths.path("_residual.csv"), csv.str());

    std::cout << "u_err slope = " << fmt_double(rep.uerr_slope) << " (target 3), Phi-sum slope = "
              << fmt_double(rep.phisum_slope) << " (target 2)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"suspvisc: dilute Stokes suspension viscosity toolkit"};
    app.require_subcommand(1);

    CommonOpts common;
    if (const char* env = std::getenv("SUSPVISC_OUT_DIR")) common.out_dir = env;
    app.add_option("--config", common.config_file, "flat key = value config file; flags override");
    app.add_option("--out-dir", common.out_dir, "output directory (env SUSPVISC_OUT_DIR)");
    app.add_option("--threads", common.threads, "worker thread cap");
    app.add_flag("--strict", common.strict, "nonzero exit on any flagged solver failure");

    std::string stem = "suspvisc";
    app.add_option("--stem", stem, "output file stem");

    // validate
    auto* validate = app.add_subcommand("validate", "run the exact-identity suite");
    bool builtin = false;
    validate->add_flag("--builtin", builtin, "run the built-in identities (default)");

    // mu2
    auto* mu2cmd = app.add_subcommand("mu2", "evaluate the Batchelor-Green coefficient");
    std::string g2_kind = "hardcore-uniform", g2_file;
    double r0 = 2.5, n_big = 1e6, lambda = 0.0;
    int radial_nodes = 256, sphere_order = 14;
    bool use_mc = false;
    mu2cmd->add_option("--g2", g2_kind, "hardcore-uniform | matern | file");
    mu2cmd->add_option("--g2-file", g2_file, "CSV estimate (with --g2 file)");
    mu2cmd->add_option("--r0", r0, "hardcore radius");
    mu2cmd->add_option("--n", n_big, "finite-N window");
    mu2cmd->add_option("--lambda", lambda, "Poisson parent intensity (matern)");
    mu2cmd->add_option("--radial-nodes", radial_nodes, "radial resolution");
    mu2cmd->add_option("--sphere-order", sphere_order, "shell quadrature order");
    mu2cmd->add_flag("--mc", use_mc, "stratified MC for the correlation part");

    // pair-table
    auto* ptcmd = app.add_subcommand("pair-table", "write the tabulated pair kernel cache");
    double pt_rmin = 2.0 + 1e-7, pt_rmax = 100.0;
    int pt_nodes = 128, pt_order = 12;
    ptcmd->add_option("--rmin", pt_rmin, "grid start");
    ptcmd->add_option("--rmax", pt_rmax, "grid end");
    ptcmd->add_option("--nodes", pt_nodes, "log-spaced node count");
    ptcmd->add_option("--sphere-order", pt_order, "shell quadrature order");

    // pointprocess
    auto* ppcmd = app.add_subcommand("pointprocess", "Matern-I sampling and g2 validation");
    bool matern1 = true;
    double pp_lambda = 0.01, pp_r0 = 2.5, pp_l = 20.0;
    int pp_trials = 500;
    std::uint64_t pp_seed = 2026;
    ppcmd->add_flag("--matern1", matern1, "Matern type-I process (default)");
    ppcmd->add_option("--lambda", pp_lambda, "Poisson parent intensity");
    ppcmd->add_option("--r0", pp_r0, "hardcore radius");
    ppcmd->add_option("--trials", pp_trials, "ensemble size");
    ppcmd->add_option("--L", pp_l, "ball domain radius");
    ppcmd->add_option("--seed", pp_seed, "rng seed");
    std::string pp_lambda_grid;
    ppcmd->add_option("--lambda-grid", pp_lambda_grid,
                      "report the |g2-1| envelope across a lambda grid (no pass/fail)");

    // finite-n
    auto* fncmd = app.add_subcommand("finite-n", "ensemble finite-N viscosity and Einstein slope");
    std::string fn_phis = "0.005,0.01,0.02";
    double fn_n = 64000, fn_r0 = 2.5;
    int fn_ensemble = 50;
    std::uint64_t fn_seed = 2026;
    fncmd->add_option("--phi-grid", fn_phis, "comma separated volume fractions");
    fncmd->add_option("--n", fn_n, "domain N = L^3");
    fncmd->add_option("--ensemble", fn_ensemble, "configurations per phi");
    fncmd->add_option("--r0", fn_r0, "hardcore radius");
    fncmd->add_option("--seed", fn_seed, "rng seed");

    // residual-scaling
    auto* rscmd = app.add_subcommand("residual-scaling", "cluster residual scaling in phi");
    std::string rs_phis = "0.01,0.02,0.04";
    int rs_spheres = 200, rs_ensemble = 50;
    double rs_r0 = 2.05;
    std::uint64_t rs_seed = 2026;
    rscmd->add_option("--phi-grid", rs_phis, "comma separated volume fractions");
    rscmd->add_option("--spheres", rs_spheres, "target spheres per configuration");
    rscmd->add_option("--ensemble", rs_ensemble, "configurations per phi");
    rscmd->add_option("--r0", rs_r0, "hardcore radius (2.05 reaches phi = 0.04)");
    rscmd->add_option("--seed", rs_seed, "rng seed");

    // config file pass: apply before flags by reparsing argv with defaults from file
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (!common.config_file.empty()) {
            const auto kv = read_config_file(common.config_file);
            static const std::map<std::string, std::string> known = {
                {"out_dir", ""}, {"threads", ""}, {"stem", ""},
                {"mu2.g2", ""}, {"mu2.r0", ""}, {"mu2.n", ""}, {"mu2.lambda", ""},
                {"mu2.radial_nodes", ""}, {"mu2.sphere_order", ""},
                {"pointprocess.lambda", ""}, {"pointprocess.r0", ""},
                {"pointprocess.trials", ""}, {"pointprocess.L", ""}, {"pointprocess.seed", ""},
                {"finite_n.phi_grid", ""}, {"finite_n.n", ""}, {"finite_n.ensemble", ""},
                {"finite_n.r0", ""}, {"finite_n.seed", ""},
                {"residual.phi_grid", ""}, {"residual.spheres", ""}, {"residual.ensemble", ""},
                {"residual.r0", ""}, {"residual.seed", ""},
                {"pair_table.rmin", ""}, {"pair_table.rmax", ""}, {"pair_table.nodes", ""}};
            for (const auto& [key, val] : kv) {
                if (known.find(key) == known.end())
                    throw std::runtime_error("unknown config key: " + key);
                // flags always override the file: only fill values still at defaults
                if (key == "out_dir" && common.out_dir == ".") common.out_dir = val;
                else if (key == "threads" && common.threads == 1) common.threads = std::stoi(val);
                else if (key == "stem" && stem == "suspvisc") stem = val;
                else if (key == "mu2.g2" && g2_kind == "hardcore-uniform") g2_kind = val;
                else if (key == "mu2.r0") r0 = std::stod(val);
                else if (key == "mu2.n") n_big = std::stod(val);
                else if (key == "mu2.lambda") lambda = std::stod(val);
                else if (key == "mu2.radial_nodes") radial_nodes = std::stoi(val);
                else if (key == "mu2.sphere_order") sphere_order = std::stoi(val);
                else if (key == "pointprocess.lambda") pp_lambda = std::stod(val);
                else if (key == "pointprocess.r0") pp_r0 = std::stod(val);
                else if (key == "pointprocess.trials") pp_trials = std::stoi(val);
                else if (key == "pointprocess.L") pp_l = std::stod(val);
                else if (key == "pointprocess.seed") pp_seed = std::stoull(val);
                else if (key == "finite_n.phi_grid") fn_phis = val;
                else if (key == "finite_n.n") fn_n = std::stod(val);
                else if (key == "finite_n.ensemble") fn_ensemble = std::stoi(val);
                else if (key == "finite_n.r0") fn_r0 = std::stod(val);
                else if (key == "finite_n.seed") fn_seed = std::stoull(val);
                else if (key == "residual.phi_grid") rs_phis = val;
                else if (key == "residual.spheres") rs_spheres = std::stoi(val);
                else if (key == "residual.ensemble") rs_ensemble = std::stoi(val);
                else if (key == "residual.r0") rs_r0 = std::stod(val);
                else if (key == "residual.seed") rs_seed = std::stoull(val);
                else if (key == "pair_table.rmin") pt_rmin = std::stod(val);
                else if (key == "pair_table.rmax") pt_rmax = std::stod(val);
                else if (key == "pair_table.nodes") pt_nodes = std::stoi(val);
            }
        }
        ensure_dir(common.out_dir);

        if (validate->parsed()) return run_validate(common, stem);
        if (mu2cmd->parsed())
            return run_mu2(common, g2_kind, g2_file, r0, n_big, lambda, radial_nodes, sphere_order,
                           use_mc, stem);
        if (ptcmd->parsed()) return run_pair_table(common, pt_rmin, pt_rmax, pt_nodes, pt_order, stem);
        if (ppcmd->parsed())
            return run_pointprocess(common, pp_lambda, pp_r0, pp_trials, pp_l, pp_seed,
                                    pp_lambda_grid, stem);
        if (fncmd->parsed())
            return run_finite_n(common, fn_phis, fn_n, fn_ensemble, fn_r0, fn_seed, stem);
        if (rscmd->parsed())
            return run_residual_scaling(common, rs_phis, rs_spheres, rs_ensemble, rs_r0, rs_seed,
                                        stem);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
