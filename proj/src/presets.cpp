#include "ppkit/presets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ppkit {

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{
        "linear-hawkes-exp",      "linear-hawkes-multigauss-mle", "linear-hawkes-multigauss-lse", "factorized-pp",
        "semi-parametric-hawkes", "self-correcting",              "mutually-correcting",
    };
    return names;
}

bool is_preset(const std::string& name) {
    const auto& names = preset_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

TimeScale time_scale(const Database& db) {
    std::vector<double> gaps;
    for (const auto& seq : db.sequences) {
        for (std::size_t i = 1; i < seq.size(); ++i) {
            const double g = seq.times[i] - seq.times[i - 1];
            if (g > 0.0) gaps.push_back(g);
        }
    }
    TimeScale s;
    if (gaps.empty()) return s;
    double total = 0.0;
    for (double g : gaps) total += g;
    s.mean_gap = total / static_cast<double>(gaps.size());
    std::sort(gaps.begin(), gaps.end());
    const auto k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(gaps.size()))) - 1;
    s.tail_gap = std::max(gaps[std::min(k, gaps.size() - 1)], s.mean_gap);
    return s;
}

KernelBank default_kernels(KernelKind kind, const TimeScale& scale, std::size_t basis) {
    const double tau = scale.mean_gap;
    switch (kind) {
        case KernelKind::Exponential: return KernelBank::exponential(1.0 / tau);
        case KernelKind::Rayleigh: return KernelBank::rayleigh(1.0 / (tau * tau));
        case KernelKind::Gaussian: return KernelBank::gaussian(tau);
        case KernelKind::Powerlaw: return KernelBank::powerlaw(2.0, tau);
        case KernelKind::Gate: return KernelBank::gate(0.0, tau);
        case KernelKind::MultiGauss: return KernelBank::multi_gauss_grid(std::max<std::size_t>(basis, 2), scale.tail_gap);
    }
    throw std::invalid_argument("unknown kernel family");
}

Preset make_preset(const std::string& name, const TimeScale& scale, std::size_t basis) {
    Preset p;
    p.name = name;
    auto& c = p.composition;
    const auto softplus = Activation::softplus();
    const auto identity = Activation::identity();
    auto linear_hawkes = [&](KernelKind kernel, LossKind loss) {
        c.exogenous = ExogenousKind::Naive;
        c.exogenous_activation = softplus;
        c.impact = ImpactKind::Naive;
        c.impact_activation = identity;
        c.kernels = default_kernels(kernel, scale, basis);
        c.outer = identity;
        p.loss = loss;
        p.nonnegative = std::set<std::string>{"impact.alpha"};
    };
    if (name == "linear-hawkes-exp") {
        linear_hawkes(KernelKind::Exponential, LossKind::MaxLogLike);
    } else if (name == "linear-hawkes-multigauss-mle") {
        linear_hawkes(KernelKind::MultiGauss, LossKind::MaxLogLike);
    } else if (name == "linear-hawkes-multigauss-lse") {
        linear_hawkes(KernelKind::MultiGauss, LossKind::LeastSquare);
    } else if (name == "factorized-pp") {
        c.exogenous = ExogenousKind::Linear;
        c.exogenous_activation = softplus;
        c.impact = ImpactKind::Factorized;
        c.impact_activation = identity;
        c.kernels = default_kernels(KernelKind::Exponential, scale, basis);
        c.outer = identity;
        p.loss = LossKind::LeastSquare;
        p.nonnegative = std::set<std::string>{"impact.u", "impact.v"};
    } else if (name == "semi-parametric-hawkes") {
        c.exogenous = ExogenousKind::Linear;
        c.exogenous_activation = softplus;
        c.impact = ImpactKind::Naive;
        c.impact_activation = identity;
        c.kernels = default_kernels(KernelKind::MultiGauss, scale, basis);
        c.outer = identity;
        p.loss = LossKind::MaxLogLike;
        p.nonnegative = std::set<std::string>{"impact.alpha"};
    } else if (name == "self-correcting" || name == "mutually-correcting") {
        c.exogenous = ExogenousKind::Linear;
        c.exogenous_activation = identity;
        c.impact = ImpactKind::Linear;
        c.impact_activation = identity;
        c.kernels = default_kernels(name == "self-correcting" ? KernelKind::Gate : KernelKind::Gaussian, scale, basis);
        c.outer = softplus;
        p.loss = name == "self-correcting" ? LossKind::MaxLogLike : LossKind::CrossEntropy;
    } else {
        std::string list;
        for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
        throw std::invalid_argument("unknown preset '" + name + "'; valid presets: " + list);
    }
    return p;
}

}  // namespace ppkit
