#pragma once

// Reference computations used as test oracles. Nothing here calls into the
// library's numerics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

/// Adaptive Gauss-Kronrod integral of f over [a, b], split at the given
/// interior breakpoints so that piecewise kernels integrate cleanly.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        std::vector<double> breaks = {}) {
    if (b <= a) return 0.0;
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = std::max(a, breaks[i]);
        const double hi = std::min(b, breaks[i + 1]);
        if (hi <= lo) continue;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 10, 1e-13);
    }
    return total;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Asymptotic Kolmogorov survival function with Stephens' small-sample
/// correction for the one-sample statistic.
inline double kolmogorov_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-3) return 1.0;
    double p = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        p += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

struct KsResult {
    double statistic{0.0};
    double p_value{1.0};
};

inline KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = cdf(xs[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return {d, kolmogorov_pvalue(d, xs.size())};
}

inline KsResult ks_exponential(const std::vector<double>& xs) {
    return ks_test(xs, [](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x); });
}

/// Pearson chi-square statistic and its upper-tail p-value.
inline std::pair<double, double> chi_square(const std::vector<double>& observed, const std::vector<double>& expected,
                                            double dof) {
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double diff = observed[i] - expected[i];
        stat += diff * diff / expected[i];
    }
    boost::math::chi_squared dist(dof);
    return {stat, boost::math::cdf(boost::math::complement(dist, stat))};
}

/// Per-bin, per-type counts by scanning every event against every bin.
inline std::vector<std::vector<std::size_t>> brute_force_bins(const std::vector<double>& times,
                                                              const std::vector<std::size_t>& types,
                                                              std::size_t num_types, double t_start, double t_stop,
                                                              double width) {
    std::size_t bins = 1;
    while (t_start + static_cast<double>(bins) * width < t_stop) ++bins;
    std::vector<std::vector<std::size_t>> out(bins, std::vector<std::size_t>(num_types, 0));
    for (std::size_t b = 0; b < bins; ++b) {
        const double lo = t_start + static_cast<double>(b) * width;
        const double hi = t_start + static_cast<double>(b + 1) * width;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const bool inside = times[i] >= lo && (times[i] < hi || (b + 1 == bins && times[i] <= t_stop));
            if (inside) ++out[b][types[i]];
        }
    }
    return out;
}

/// Decay kernel values written straight from their defining formulas.
/// `params` holds the parameter groups in declaration order.
inline std::vector<double> kernel_value(const std::string& kind, const std::vector<std::vector<double>>& params,
                                        double t) {
    const double pi = 3.14159265358979323846;
    if (kind == "exponential") {
        const double w = params[0][0], d = params[1][0];
        return {t < d ? 0.0 : w * std::exp(-w * (t - d))};
    }
    if (kind == "rayleigh") {
        const double w = params[0][0];
        return {w * t * std::exp(-w * t * t / 2.0)};
    }
    if (kind == "gaussian") {
        const double s = params[0][0];
        return {std::exp(-t * t / (2 * s * s)) / (std::sqrt(2 * pi) * s)};
    }
    if (kind == "powerlaw") {
        const double w = params[0][0], d = params[1][0];
        return {t < d ? (w - 1) / d : (w - 1) * std::pow(d, w - 1) * std::pow(t, -w)};
    }
    if (kind == "gate") {
        const double w = params[0][0], d = params[1][0];
        return {t >= w && t <= w + d ? 1.0 / d : 0.0};
    }
    std::vector<double> out;
    for (std::size_t m = 0; m < params[0].size(); ++m) {
        const double c = params[0][m], s = params[1][m];
        out.push_back(std::exp(-(t - c) * (t - c) / (2 * s * s)) / (std::sqrt(2 * pi) * s));
    }
    return out;
}

/// Points where a kernel or its derivative jumps.
inline std::vector<double> kernel_breaks(const std::string& kind, const std::vector<std::vector<double>>& params) {
    if (kind == "exponential" || kind == "powerlaw") return {params[1][0]};
    if (kind == "gate") return {params[0][0], params[0][0] + params[1][0]};
    if (kind == "multigauss") return params[0];
    return {};
}

/// Textbook Adam on a flat vector.
struct ReferenceAdam {
    double b1{0.9}, b2{0.999}, eps{1e-8};
    std::vector<double> m, v;
    int t{0};

    void step(std::vector<double>& x, const std::vector<double>& g, double lr) {
        if (m.empty()) m.assign(x.size(), 0.0), v.assign(x.size(), 0.0);
        ++t;
        for (std::size_t i = 0; i < x.size(); ++i) {
            m[i] = b1 * m[i] + (1 - b1) * g[i];
            v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
            const double mh = m[i] / (1 - std::pow(b1, t));
            const double vh = v[i] / (1 - std::pow(b2, t));
            x[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
};

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("ppkit_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path.string();
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace oracle
