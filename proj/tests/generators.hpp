#pragma once

// Hand-rolled random generators for property tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ppkit/core_data.hpp"
#include "ppkit/kernels.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Sorted uniform times on [t0, t1] with random types below `types`.
inline ppkit::EventSequence sequence(Rng& rng, std::size_t events, std::size_t types, double t0, double t1) {
    ppkit::EventSequence s;
    s.t_start = t0;
    s.t_stop = t1;
    for (std::size_t i = 0; i < events; ++i) s.times.push_back(uniform(rng, t0, t1));
    std::sort(s.times.begin(), s.times.end());
    for (std::size_t i = 0; i < events; ++i) s.events.push_back(index(rng, 0, types - 1));
    return s;
}

/// Valid corpus with named types t0.. and sequences s0..
inline ppkit::Database database(Rng& rng, std::size_t seqs, std::size_t types, std::size_t max_events,
                                double horizon) {
    ppkit::Database db;
    for (std::size_t c = 0; c < types; ++c) db.intern_type("t" + std::to_string(c));
    for (std::size_t s = 0; s < seqs; ++s) {
        const double t0 = uniform(rng, 0.0, horizon * 0.2);
        db.add_sequence("s" + std::to_string(s), sequence(rng, index(rng, 0, max_events), types, t0, t0 + horizon));
    }
    return db;
}

inline const std::vector<ppkit::KernelKind>& kernel_kinds() {
    static const std::vector<ppkit::KernelKind> kinds{ppkit::KernelKind::Exponential, ppkit::KernelKind::Rayleigh,
                                                      ppkit::KernelKind::Gaussian,    ppkit::KernelKind::Powerlaw,
                                                      ppkit::KernelKind::Gate,        ppkit::KernelKind::MultiGauss};
    return kinds;
}

/// Random admissible bank of the given family.
inline ppkit::KernelBank kernel(Rng& rng, ppkit::KernelKind kind) {
    using ppkit::KernelBank;
    switch (kind) {
        case ppkit::KernelKind::Exponential: return KernelBank::exponential(uniform(rng, 0.2, 4), uniform(rng, 0, 1));
        case ppkit::KernelKind::Rayleigh: return KernelBank::rayleigh(uniform(rng, 0.2, 4));
        case ppkit::KernelKind::Gaussian: return KernelBank::gaussian(uniform(rng, 0.2, 3));
        case ppkit::KernelKind::Powerlaw: return KernelBank::powerlaw(uniform(rng, 1.2, 4), uniform(rng, 0.1, 2));
        case ppkit::KernelKind::Gate: return KernelBank::gate(uniform(rng, 0, 2), uniform(rng, 0.2, 3));
        case ppkit::KernelKind::MultiGauss: {
            const std::size_t m = index(rng, 1, 4);
            std::vector<double> centers, widths;
            double c = uniform(rng, 0, 1);
            for (std::size_t k = 0; k < m; ++k) {
                centers.push_back(c);
                widths.push_back(uniform(rng, 0.1, 1.5));
                c += uniform(rng, 0.1, 2);
            }
            return KernelBank::multi_gauss(centers, widths);
        }
    }
    return KernelBank::exponential(1.0);
}

inline std::vector<std::vector<double>> kernel_params(const ppkit::KernelBank& bank) {
    std::vector<std::vector<double>> out;
    for (const auto& p : bank.parameters()) out.push_back(p.values);
    return out;
}

}  // namespace gen
