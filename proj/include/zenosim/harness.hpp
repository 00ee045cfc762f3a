#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zenosim/builtin_models.hpp"
#include "zenosim/linalg.hpp"
#include "zenosim/master.hpp"
#include "zenosim/sde.hpp"
#include "zenosim/zeno.hpp"

namespace zenosim {

using Json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key-value scenario configuration. Every field has an explicit
/// default; parse_config validates against the preconditions of the
/// operations the scenario feeds.
struct ScenarioConfig {
    std::string scenario;
    double alpha = 1.0;
    double beta = 0.0;
    double t_final = 3.0;
    double dt = 1e-3;
    std::size_t n_traj = 10000;
    std::uint64_t master_seed = 12345;
    double delta_t = 0.04;
    std::size_t n_measurements = 100;
    std::vector<double> k_list = {1.0, 4.0, 16.0, 64.0};
    std::size_t n_paths = 1000;
    double tol = 1e-10;
    std::string h0_file;  // empty -> bundled three-level example
    std::string h1_file;
    std::string out_dir = ".";
    unsigned n_threads = 0;  // 0 = hardware default

    Json echo() const {
        Json j;
        j["scenario"] = scenario;
        j["alpha"] = alpha;
        j["beta"] = beta;
        j["t_final"] = t_final;
        j["dt"] = dt;
        j["n_traj"] = n_traj;
        j["master_seed"] = master_seed;
        j["delta_t"] = delta_t;
        j["n_measurements"] = n_measurements;
        j["k_list"] = k_list;
        j["n_paths"] = n_paths;
        j["tol"] = tol;
        j["h0_file"] = h0_file;
        j["h1_file"] = h1_file;
        j["out_dir"] = out_dir;
        j["n_threads"] = n_threads;
        return j;
    }
};

struct Assertion {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double bound = 0.0;
};

struct RunReport {
    std::string scenario;
    ScenarioConfig config;
    std::map<std::string, double> rates;
    std::vector<Assertion> assertions;
    double wall_seconds = 0.0;  // console only, never serialized
    std::string timeseries_path;
    std::string summary_path;

    bool all_pass() const {
        return std::all_of(assertions.begin(), assertions.end(),
                           [](const Assertion& a) { return a.pass; });
    }
};

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {
        "rabi",          "dephasing-ensemble", "master-vs-analytic",     "zeno-noise",
        "zeno-pulsed",   "equivalence",        "subspaces-general",      "decoherence-free-check"};
    return names;
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid numeric value for key '" + key + "': " + value);
    }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(value, &pos);
        if (pos != value.size() || v < 0) throw std::invalid_argument("bad");
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("invalid non-negative integer for key '" + key + "': " + value);
    }
}

inline std::string format17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    bool have_scenario = false, have_beta = false, have_delta = false;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (value.empty()) throw ConfigError("missing value for key '" + key + "'");

        if (key == "scenario") {
            const auto& names = scenario_names();
            if (std::find(names.begin(), names.end(), value) == names.end())
                throw ConfigError("unknown scenario '" + value + "'");
            cfg.scenario = value;
            have_scenario = true;
        } else if (key == "alpha") {
            cfg.alpha = detail::parse_double(key, value);
        } else if (key == "beta") {
            cfg.beta = detail::parse_double(key, value);
            if (cfg.beta < 0.0) throw ConfigError("out-of-range value for key 'beta': must be >= 0");
            have_beta = true;
        } else if (key == "beta2") {
            double b2 = detail::parse_double(key, value);
            if (b2 < 0.0) throw ConfigError("out-of-range value for key 'beta2': must be >= 0");
            cfg.beta = std::sqrt(b2);
            have_beta = true;
        } else if (key == "t_final") {
            cfg.t_final = detail::parse_double(key, value);
            if (cfg.t_final <= 0.0)
                throw ConfigError("out-of-range value for key 't_final': must be > 0");
        } else if (key == "dt") {
            cfg.dt = detail::parse_double(key, value);
            if (cfg.dt <= 0.0) throw ConfigError("out-of-range value for key 'dt': must be > 0");
        } else if (key == "n_traj") {
            cfg.n_traj = detail::parse_uint(key, value);
            if (cfg.n_traj < 2)
                throw ConfigError("out-of-range value for key 'n_traj': must be >= 2");
        } else if (key == "master_seed") {
            cfg.master_seed = detail::parse_uint(key, value);
        } else if (key == "delta_t") {
            cfg.delta_t = detail::parse_double(key, value);
            if (cfg.delta_t <= 0.0)
                throw ConfigError("out-of-range value for key 'delta_t': must be > 0");
            have_delta = true;
        } else if (key == "n_measurements") {
            cfg.n_measurements = detail::parse_uint(key, value);
            if (cfg.n_measurements < 1)
                throw ConfigError("out-of-range value for key 'n_measurements': must be >= 1");
        } else if (key == "k_list") {
            cfg.k_list.clear();
            std::istringstream ks(value);
            std::string tok;
            while (std::getline(ks, tok, ',')) {
                tok = detail::trim(tok);
                if (!tok.empty()) cfg.k_list.push_back(detail::parse_double(key, tok));
            }
            if (cfg.k_list.empty()) throw ConfigError("empty list for key 'k_list'");
        } else if (key == "n_paths") {
            cfg.n_paths = detail::parse_uint(key, value);
            if (cfg.n_paths < 1)
                throw ConfigError("out-of-range value for key 'n_paths': must be >= 1");
        } else if (key == "tol") {
            cfg.tol = detail::parse_double(key, value);
            if (cfg.tol <= 0.0) throw ConfigError("out-of-range value for key 'tol': must be > 0");
        } else if (key == "h0_file") {
            cfg.h0_file = value;
        } else if (key == "h1_file") {
            cfg.h1_file = value;
        } else if (key == "out_dir") {
            cfg.out_dir = value;
        } else if (key == "n_threads") {
            cfg.n_threads = static_cast<unsigned>(detail::parse_uint(key, value));
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    if (!have_scenario) throw ConfigError("missing required key 'scenario'");
    if ((cfg.scenario == "dephasing-ensemble" || cfg.scenario == "zeno-noise" ||
         cfg.scenario == "equivalence") &&
        !have_beta)
        throw ConfigError("missing required key 'beta' (or 'beta2') for scenario '" +
                          cfg.scenario + "'");
    if (cfg.scenario == "equivalence") {
        double beta2 = cfg.beta * cfg.beta;
        if (!(beta2 >= 10.0 * cfg.alpha))
            throw ConfigError(
                "precondition violation for key 'beta': equivalence requires beta^2 >= 10*alpha");
    }
    if (cfg.scenario == "zeno-pulsed" && !have_delta && cfg.n_measurements < 1)
        throw ConfigError("missing required key 'delta_t' for scenario 'zeno-pulsed'");
    if ((!cfg.h0_file.empty()) != (!cfg.h1_file.empty()))
        throw ConfigError("keys 'h0_file' and 'h1_file' must be given together");
    return cfg;
}

inline ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Sidecar matrix format: dimension on the first line, then dim*dim
/// whitespace-separated "re im" pairs in row-major order.
inline Matrix load_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open matrix file: " + path);
    Eigen::Index dim = 0;
    if (!(in >> dim) || dim < 1 || dim > kMaxDim)
        throw ConfigError("bad dimension in matrix file: " + path);
    Matrix m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) {
            double re, im;
            if (!(in >> re >> im))
                throw ConfigError("truncated matrix file: " + path);
            m(i, j) = Complex(re, im);
        }
    return m;
}

inline void save_matrix_file(const Matrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write matrix file: " + path);
    out << m.rows() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out << detail::format17(m(i, j).real()) << " " << detail::format17(m(i, j).imag());
            out << (j + 1 < m.cols() ? " " : "\n");
        }
    }
}

namespace detail {

struct CsvWriter {
    std::ostringstream out;

    void header(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            out << cols[i] << (i + 1 < cols.size() ? "," : "\n");
    }
    void row(const std::vector<double>& vals) {
        for (std::size_t i = 0; i < vals.size(); ++i)
            out << format17(vals[i]) << (i + 1 < vals.size() ? "," : "\n");
    }
    void write(const std::string& path) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << out.str();
    }
};

inline void push_assert(RunReport& rep, const std::string& name, double value, double bound,
                        bool pass) {
    rep.assertions.push_back(Assertion{name, pass, value, bound});
}

inline ZenoDecomposition sigma3_decomposition() {
    return compute_zeno_subspaces(pauli(3), Matrix::Zero(2, 2));
}

inline StateVector up_state() {
    Vector v(2);
    v << 1.0, 0.0;
    return StateVector(v);
}

inline std::pair<Matrix, Matrix> resolve_matrices(const ScenarioConfig& cfg) {
    if (!cfg.h0_file.empty()) return {load_matrix_file(cfg.h0_file), load_matrix_file(cfg.h1_file)};
    return {three_level_h0(), three_level_h1()};
}

}  // namespace detail

inline RunReport run_scenario(const ScenarioConfig& cfg) {
    namespace fs = std::filesystem;
    auto t_start = std::chrono::steady_clock::now();
    RunReport rep;
    rep.scenario = cfg.scenario;
    rep.config = cfg;
    fs::create_directories(cfg.out_dir);
    std::string base = (fs::path(cfg.out_dir) / cfg.scenario).string();
    rep.timeseries_path = base + "_timeseries.csv";
    rep.summary_path = base + "_summary.json";
    detail::CsvWriter csv;

    if (cfg.scenario == "rabi") {
        auto n_steps = static_cast<std::size_t>(std::llround(cfg.t_final / cfg.dt));
        TwoLevelParams params(cfg.alpha, 0.0);
        NoisePath path(cfg.dt, std::vector<double>(n_steps, 0.0), {cfg.master_seed, 0});
        TrajectoryRecord traj = evolve_trajectory(params.to_model(), detail::up_state(), path);
        csv.header({"t", "x", "y", "z", "x_ref", "y_ref", "z_ref"});
        double max_err = 0.0;
        for (std::size_t r = 0; r < traj.times.size(); ++r) {
            double t = traj.times[r];
            BlochVector ref = analytic_bloch_solution(params, BlochVector{0, 0, 1}, t);
            const BlochVector& b = traj.bloch[r];
            csv.row({t, b.x, b.y, b.z, ref.x, ref.y, ref.z});
            max_err = std::max({max_err, std::abs(b.x - ref.x), std::abs(b.y - ref.y),
                                std::abs(b.z - ref.z)});
        }
        detail::push_assert(rep, "rabi_max_deviation_from_cos2at", max_err, 1e-6,
                            max_err < 1e-6);
    } else if (cfg.scenario == "dephasing-ensemble" || cfg.scenario == "zeno-noise") {
        auto n_steps = static_cast<std::size_t>(std::llround(cfg.t_final / cfg.dt));
        TwoLevelParams params(cfg.alpha, cfg.beta);
        std::size_t stride = std::max<std::size_t>(1, n_steps / 50);
        EnsembleRecord ens =
            ensemble_average(params.to_model(), detail::up_state(), cfg.n_traj, cfg.master_seed,
                             cfg.dt, n_steps, stride, cfg.n_threads);
        csv.header({"t", "x_mean", "y_mean", "z_mean", "x_stderr", "y_stderr", "z_stderr",
                    "x_ref", "y_ref", "z_ref"});
        std::size_t within2 = 0, total = 0;
        double worst_sigma = 0.0;
        std::vector<double> fit_t, fit_z;
        // tally the 2-sigma fraction on ~20 well-separated grid times:
        // consecutive recorded means share trajectories, so a fine grid
        // would count one fluctuation many times over
        std::size_t tally_stride = std::max<std::size_t>(1, (ens.times.size() - 1) / 20);
        for (std::size_t r = 0; r < ens.times.size(); ++r) {
            double t = ens.times[r];
            BlochVector ref = analytic_bloch_solution(params, BlochVector{0, 0, 1}, t);
            const BlochVector& m = ens.mean_bloch[r];
            const BlochVector& s = ens.stderr_bloch[r];
            csv.row({t, m.x, m.y, m.z, s.x, s.y, s.z, ref.x, ref.y, ref.z});
            auto tally = [&](double mean, double se, double rf) {
                double sigmas = se > 0.0 ? std::abs(mean - rf) / se : 0.0;
                worst_sigma = std::max(worst_sigma, sigmas);
                ++total;
                if (sigmas <= 2.0) ++within2;
            };
            if (r > 0 && r % tally_stride == 0) {  // stderr is 0 at t=0
                tally(m.x, s.x, ref.x);
                tally(m.y, s.y, ref.y);
                tally(m.z, s.z, ref.z);
            }
            if (m.z > 0.0) {
                fit_t.push_back(t);
                fit_z.push_back(m.z);
            }
        }
        detail::push_assert(rep, "ensemble_within_4_stderr_of_analytic", worst_sigma, 4.0,
                            worst_sigma < 4.0);
        double frac2 = total > 0 ? static_cast<double>(within2) / static_cast<double>(total) : 1.0;
        detail::push_assert(rep, "ensemble_fraction_within_2_stderr", frac2, 0.95, frac2 >= 0.95);
        if (cfg.scenario == "zeno-noise") {
            double rate = fit_exponential_rate(fit_t, fit_z);
            double ref_rate = 2.0 * cfg.alpha * cfg.alpha / (cfg.beta * cfg.beta);
            rep.rates["rate_fit"] = rate;
            rep.rates["rate_reference"] = ref_rate;
            double rel = std::abs(rate - ref_rate) / ref_rate;
            detail::push_assert(rep, "zeno_noise_rate_within_10pct", rel, 0.1, rel < 0.1);
        }
    } else if (cfg.scenario == "master-vs-analytic") {
        TwoLevelParams params(cfg.alpha, cfg.beta);
        DensityMatrix rho0 = density_from_bloch(BlochVector{0, 0, 1});
        auto rhos = integrate_master(rho0, params.to_model(), cfg.t_final, cfg.dt);
        csv.header({"t", "x", "y", "z", "x_ref", "y_ref", "z_ref"});
        double max_err = 0.0;
        for (std::size_t k = 0; k < rhos.size(); ++k) {
            double t = static_cast<double>(k) * cfg.dt;
            BlochVector b = bloch_from_density(rhos[k]);
            BlochVector ref = analytic_bloch_solution(params, BlochVector{0, 0, 1}, t);
            csv.row({t, b.x, b.y, b.z, ref.x, ref.y, ref.z});
            max_err = std::max({max_err, std::abs(b.x - ref.x), std::abs(b.y - ref.y),
                                std::abs(b.z - ref.z)});
        }
        detail::push_assert(rep, "master_matches_analytic_1e-6", max_err, 1e-6, max_err < 1e-6);
    } else if (cfg.scenario == "zeno-pulsed") {
        ZenoDecomposition decomp = detail::sigma3_decomposition();
        DensityMatrix rho0 = density_from_bloch(BlochVector{0, 0, 1});
        MeasurementSchedule schedule(cfg.n_measurements, cfg.delta_t);
        auto rhos = pulsed_zeno_evolution(rho0, cfg.alpha * pauli(1), decomp, schedule);
        csv.header({"t", "z", "z_closed_form", "z_exponential_limit"});
        double czz = std::cos(2.0 * cfg.alpha * cfg.delta_t);
        double closed = 1.0;
        double max_err = 0.0;
        double zeno_rate = 2.0 * cfg.alpha * cfg.alpha * cfg.delta_t;
        for (std::size_t k = 0; k < rhos.size(); ++k) {
            double t = static_cast<double>(k + 1) * cfg.delta_t;
            closed *= czz;
            double z = bloch_from_density(rhos[k]).z;
            csv.row({t, z, closed, std::exp(-zeno_rate * t)});
            max_err = std::max(max_err, std::abs(z - closed));
        }
        rep.rates["rate_reference"] = zeno_rate;
        detail::push_assert(rep, "pulsed_matches_cos_power_recursion", max_err, 1e-12,
                            max_err < 1e-12);
    } else if (cfg.scenario == "equivalence") {
        EquivalenceReport eq =
            noise_measurement_equivalence(cfg.alpha, cfg.beta, cfg.t_final, cfg.n_traj,
                                          cfg.master_seed, cfg.dt, cfg.n_threads);
        csv.header({"quantity", "value"});
        csv.out << "rate_noise," << detail::format17(eq.rate_noise) << "\n";
        csv.out << "rate_pulsed," << detail::format17(eq.rate_pulsed) << "\n";
        csv.out << "rate_reference," << detail::format17(eq.reference_rate) << "\n";
        rep.rates["rate_noise"] = eq.rate_noise;
        rep.rates["rate_pulsed"] = eq.rate_pulsed;
        rep.rates["rate_reference"] = eq.reference_rate;
        double rel_n = std::abs(eq.rate_noise - eq.reference_rate) / eq.reference_rate;
        double rel_p = std::abs(eq.rate_pulsed - eq.reference_rate) / eq.reference_rate;
        detail::push_assert(rep, "noise_rate_within_10pct_of_reference", rel_n, 0.1, rel_n < 0.1);
        detail::push_assert(rep, "pulsed_rate_within_10pct_of_reference", rel_p, 0.1, rel_p < 0.1);
        detail::push_assert(rep, "rates_within_10pct_of_each_other", eq.relative_difference, 0.1,
                            eq.relative_difference < 0.1);
    } else if (cfg.scenario == "subspaces-general") {
        auto [h0, h1] = detail::resolve_matrices(cfg);
        ZenoDecomposition decomp = compute_zeno_subspaces(h1, h0);
        Eigen::Index d = h0.rows();
        // projector algebra
        Matrix sum = Matrix::Zero(d, d);
        double worst = 0.0;
        for (std::size_t n = 0; n < decomp.projectors.size(); ++n) {
            const Matrix& p = decomp.projectors[n];
            worst = std::max(worst, (p * p - p).cwiseAbs().maxCoeff());
            sum += p;
            for (std::size_t m2 = n + 1; m2 < decomp.projectors.size(); ++m2)
                worst = std::max(worst,
                                 (p * decomp.projectors[m2]).cwiseAbs().maxCoeff());
        }
        worst = std::max(worst, (sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff());
        detail::push_assert(rep, "projector_algebra_1e-10", worst, 1e-10, worst < 1e-10);
        // leakage K-sweep over shared paths
        auto n_steps = static_cast<std::size_t>(std::llround(cfg.t_final / cfg.dt));
        csv.header({"K", "mean_leakage"});
        std::vector<double> means;
        for (double k : cfg.k_list) {
            ModelSpec model(h0, h1, k);
            double acc = 0.0;
            for (std::size_t p = 0; p < cfg.n_paths; ++p) {
                NoisePath path = generate_wiener_path(cfg.master_seed, p, cfg.dt, n_steps);
                Matrix u = interaction_picture_operator(model, path, cfg.t_final);
                acc += subspace_leakage(u, decomp);
            }
            means.push_back(acc / static_cast<double>(cfg.n_paths));
            csv.row({k, means.back()});
        }
        bool decreasing = true;
        for (std::size_t i = 0; i + 1 < means.size(); ++i)
            decreasing = decreasing && means[i + 1] < means[i];
        detail::push_assert(rep, "leakage_strictly_decreasing_in_K",
                            means.empty() ? 0.0 : means.back(), 0.0, decreasing);
    } else if (cfg.scenario == "decoherence-free-check") {
        auto [h0, h1] = detail::resolve_matrices(cfg);
        ZenoDecomposition decomp = compute_zeno_subspaces(h1, h0);
        ModelSpec model(h0, h1, 1.0);
        DecoherenceFreeReport dfr = verify_decoherence_free(model, decomp, cfg.tol);
        csv.header({"quantity", "value"});
        csv.out << "max_residual," << detail::format17(dfr.max_residual) << "\n";
        rep.rates["max_residual"] = dfr.max_residual;
        detail::push_assert(rep, "dissipator_annihilates_projected_basis", dfr.max_residual,
                            cfg.tol, dfr.pass);
    } else {
        throw ConfigError("unknown scenario '" + cfg.scenario + "'");
    }

    csv.write(rep.timeseries_path);
    Json summary;
    summary["scenario"] = cfg.scenario;
    summary["config"] = cfg.echo();
    Json jrates = Json::object();
    for (const auto& [k, v] : rep.rates) jrates[k] = v;
    summary["rates"] = jrates;
    Json jasserts = Json::array();
    for (const auto& a : rep.assertions) {
        Json ja;
        ja["name"] = a.name;
        ja["value"] = a.value;
        ja["bound"] = a.bound;
        ja["pass"] = a.pass;
        jasserts.push_back(ja);
    }
    summary["assertions"] = jasserts;
    {
        std::ofstream f(rep.summary_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + rep.summary_path);
        f << summary.dump(2) << "\n";
    }
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rep;
}

}  // namespace zenosim
