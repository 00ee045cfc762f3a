#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace zenosim {

struct SeedProvenance {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Per-stream seed: mix master seed, stream index and a salt so that
/// distinct (stream, salt) pairs get statistically independent generators.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t salt = 0) {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    if (salt != 0) s = splitmix64(s ^ splitmix64(salt));
    return s;
}

/// Inverse normal CDF, Acklam's rational approximation refined by one
/// Halley step against erfc. Fixed algorithm: the Gaussian draws are part
/// of the reproducibility contract, so no std::normal_distribution.
inline double inverse_normal_cdf(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

/// Deterministic standard-normal stream on top of mt19937_64.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {
        // 53-bit uniform in (0,1); 0 is remapped to keep log() finite
        double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double normal() { return inverse_normal_cdf(uniform01()); }

private:
    std::mt19937_64 engine_;
};

}  // namespace detail

/// Discretized Wiener realization: increments[k] = W((k+1)dt) - W(k dt).
class NoisePath {
public:
    NoisePath(double dt, std::vector<double> increments, SeedProvenance prov,
              std::uint32_t refine_level = 0)
        : dt_(dt), increments_(std::move(increments)), prov_(prov),
          refine_level_(refine_level) {
        if (dt_ <= 0.0) throw std::invalid_argument("NoisePath: dt must be positive");
        for (double w : increments_)
            if (!std::isfinite(w)) throw std::invalid_argument("NoisePath: non-finite increment");
    }

    double dt() const { return dt_; }
    std::size_t n_steps() const { return increments_.size(); }
    double total_time() const { return dt_ * static_cast<double>(increments_.size()); }
    const std::vector<double>& increments() const { return increments_; }
    const SeedProvenance& provenance() const { return prov_; }
    std::uint32_t refine_level() const { return refine_level_; }

    /// W on the grid: n_steps()+1 values, W(0) = 0.
    std::vector<double> cumulative() const {
        std::vector<double> w(increments_.size() + 1, 0.0);
        for (std::size_t k = 0; k < increments_.size(); ++k) w[k + 1] = w[k] + increments_[k];
        return w;
    }

    /// Coarse ancestor recorded by refine_path, or nullptr. Lets
    /// coarsen_path undo a refinement bit-exactly: floating-point group
    /// sums alone cannot reproduce a coarse increment whose magnitude is
    /// far below the fine-scale fluctuations.
    const NoisePath* parent(std::size_t factor) const {
        return parent_ && parent_factor_ == factor ? parent_.get() : nullptr;
    }

    void set_parent(const NoisePath& p, std::size_t factor) {
        parent_ = std::make_shared<NoisePath>(p);
        parent_factor_ = factor;
    }

private:
    double dt_;
    std::vector<double> increments_;
    SeedProvenance prov_;
    std::uint32_t refine_level_;
    std::shared_ptr<const NoisePath> parent_;
    std::size_t parent_factor_ = 0;
};

inline NoisePath generate_wiener_path(std::uint64_t master_seed, std::uint64_t stream_index,
                                      double dt, std::size_t n_steps) {
    if (dt <= 0.0) throw std::invalid_argument("generate_wiener_path: dt must be positive");
    if (n_steps < 1) throw std::invalid_argument("generate_wiener_path: n_steps must be >= 1");
    detail::GaussianStream rng(detail::derive_seed(master_seed, stream_index));
    std::vector<double> inc(n_steps);
    double scale = std::sqrt(dt);
    for (std::size_t k = 0; k < n_steps; ++k) inc[k] = scale * rng.normal();
    return NoisePath(dt, std::move(inc), SeedProvenance{master_seed, stream_index});
}

/// Brownian-bridge refinement: dt' = dt/factor, each group of `factor`
/// fine increments summing to the coarse increment (closed to within one
/// rounding of the group's partial sum). Deterministic in the path's seed
/// provenance. The coarse path is recorded so coarsen_path can undo the
/// refinement bit-exactly.
inline NoisePath refine_path(const NoisePath& path, std::size_t factor) {
    if (factor < 2) throw std::invalid_argument("refine_path: factor must be >= 2");
    const auto& coarse = path.increments();
    double h = path.dt() / static_cast<double>(factor);
    // salt separates refinement randomness from the base path and from
    // earlier refinement levels
    std::uint64_t salt =
        0x5851f42d4c957f2dULL + static_cast<std::uint64_t>(path.refine_level()) + 1;
    detail::GaussianStream rng(
        detail::derive_seed(path.provenance().master_seed, path.provenance().stream_index, salt));
    std::vector<double> fine;
    fine.reserve(coarse.size() * factor);
    double sh = std::sqrt(h);
    for (double big : coarse) {
        // iid N(0,h) conditioned on their sum: g_i + (big - sum g)/factor
        std::vector<double> g(factor);
        double gsum = 0.0;
        for (std::size_t i = 0; i < factor; ++i) {
            g[i] = sh * rng.normal();
            gsum += g[i];
        }
        double shift = (big - gsum) / static_cast<double>(factor);
        double partial = 0.0;
        for (std::size_t i = 0; i + 1 < factor; ++i) {
            double d = g[i] + shift;
            fine.push_back(d);
            partial += d;
        }
        fine.push_back(big - partial);
    }
    NoisePath out(h, std::move(fine), path.provenance(), path.refine_level() + 1);
    out.set_parent(path, factor);
    return out;
}

/// Inverse of refine_path's grouping. A path produced by refine_path with
/// the same factor is restored bit-exactly from its recorded ancestor;
/// otherwise runs of `factor` increments are summed.
inline NoisePath coarsen_path(const NoisePath& path, std::size_t factor) {
    if (factor < 2) throw std::invalid_argument("coarsen_path: factor must be >= 2");
    if (path.n_steps() % factor != 0)
        throw std::invalid_argument("coarsen_path: length not divisible by factor");
    if (const NoisePath* p = path.parent(factor)) return *p;
    const auto& fine = path.increments();
    std::vector<double> coarse(fine.size() / factor, 0.0);
    for (std::size_t k = 0; k < coarse.size(); ++k)
        for (std::size_t i = 0; i < factor; ++i) coarse[k] += fine[k * factor + i];
    std::uint32_t level = path.refine_level() > 0 ? path.refine_level() - 1 : 0;
    return NoisePath(path.dt() * static_cast<double>(factor), std::move(coarse),
                     path.provenance(), level);
}

inline void dump_path_csv(const NoisePath& path, const std::string& filename) {
    std::ofstream out(filename);
    if (!out) throw std::runtime_error("dump_path_csv: cannot open " + filename);
    out << "step_index,dW\n";
    char buf[64];
    for (std::size_t k = 0; k < path.n_steps(); ++k) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k, path.increments()[k]);
        out << buf;
    }
}

inline NoisePath load_path_csv(const std::string& filename, double dt) {
    std::ifstream in(filename);
    if (!in) throw std::runtime_error("load_path_csv: cannot open " + filename);
    std::string header;
    std::getline(in, header);
    std::vector<double> inc;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("load_path_csv: malformed line: " + line);
        inc.push_back(std::stod(line.substr(comma + 1)));
    }
    if (inc.empty()) throw std::runtime_error("load_path_csv: no increments in " + filename);
    return NoisePath(dt, std::move(inc), SeedProvenance{});
}

}  // namespace zenosim
