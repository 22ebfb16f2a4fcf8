#include "ppkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ppkit {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1 / sqrt(2 pi)
constexpr double kMinPositive = 1e-6;

void require_nonnegative(double t) {
    if (!(t >= 0.0)) throw std::domain_error("kernel argument must be nonnegative");
}

double normal_pdf(double x, double sigma) {
    const double z = x / sigma;
    return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

// Integral of N(s; center, sigma^2) over s in [0, t].
double normal_mass(double t, double center, double sigma) {
    const double scale = sigma * std::numbers::sqrt2;
    return 0.5 * (std::erf((t - center) / scale) + std::erf(center / scale));
}

}  // namespace

std::string to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::Exponential: return "exponential";
        case KernelKind::Rayleigh: return "rayleigh";
        case KernelKind::Gaussian: return "gaussian";
        case KernelKind::Powerlaw: return "powerlaw";
        case KernelKind::Gate: return "gate";
        case KernelKind::MultiGauss: return "multigauss";
    }
    return "unknown";
}

KernelKind parse_kernel_kind(const std::string& name) {
    for (auto k : {KernelKind::Exponential, KernelKind::Rayleigh, KernelKind::Gaussian,
                   KernelKind::Powerlaw, KernelKind::Gate, KernelKind::MultiGauss}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown kernel '" + name +
                                "' (exponential|rayleigh|gaussian|powerlaw|gate|multigauss)");
}

KernelBank::KernelBank(KernelKind kind, std::size_t basis, std::vector<Parameter> params)
    : kind_(kind), basis_(basis), params_(std::move(params)) {
    validate();
}

namespace {

Parameter scalar(const std::string& name, double v) {
    Parameter p(name, {1}, ParamRole::Kernel, false);
    p[0] = v;
    return p;
}

}  // namespace

KernelBank KernelBank::exponential(double omega, double delta) {
    return KernelBank(KernelKind::Exponential, 1, {scalar("kernel.omega", omega), scalar("kernel.delta", delta)});
}

KernelBank KernelBank::rayleigh(double omega) {
    return KernelBank(KernelKind::Rayleigh, 1, {scalar("kernel.omega", omega)});
}

KernelBank KernelBank::gaussian(double sigma) {
    return KernelBank(KernelKind::Gaussian, 1, {scalar("kernel.sigma", sigma)});
}

KernelBank KernelBank::powerlaw(double omega, double delta) {
    return KernelBank(KernelKind::Powerlaw, 1, {scalar("kernel.omega", omega), scalar("kernel.delta", delta)});
}

KernelBank KernelBank::gate(double omega, double delta) {
    return KernelBank(KernelKind::Gate, 1, {scalar("kernel.omega", omega), scalar("kernel.delta", delta)});
}

KernelBank KernelBank::multi_gauss(std::vector<double> centers, std::vector<double> widths) {
    if (centers.empty() || centers.size() != widths.size()) {
        throw std::invalid_argument("multigauss needs equally many centers and widths (at least one)");
    }
    const std::size_t m = centers.size();
    Parameter c("kernel.centers", {m}, ParamRole::Kernel, false);
    Parameter w("kernel.widths", {m}, ParamRole::Kernel, false);
    c.values = std::move(centers);
    w.values = std::move(widths);
    return KernelBank(KernelKind::MultiGauss, m, {std::move(c), std::move(w)});
}

KernelBank KernelBank::multi_gauss_grid(std::size_t basis, double t_max) {
    if (basis == 0) throw std::invalid_argument("multigauss grid needs at least one basis");
    if (!(t_max > 0.0)) throw std::invalid_argument("multigauss grid needs a positive horizon");
    std::vector<double> centers(basis), widths(basis);
    const double spacing = basis > 1 ? t_max / static_cast<double>(basis - 1) : t_max;
    for (std::size_t m = 0; m < basis; ++m) {
        centers[m] = spacing * static_cast<double>(m);
        widths[m] = spacing / 2.0;
    }
    return multi_gauss(std::move(centers), std::move(widths));
}

KernelBank KernelBank::from_parameters(KernelKind kind, std::vector<Parameter> params) {
    std::size_t basis = 1;
    if (kind == KernelKind::MultiGauss) {
        if (params.size() != 2) throw std::invalid_argument("multigauss expects centers and widths");
        basis = params[0].size();
    }
    return KernelBank(kind, basis, std::move(params));
}

void KernelBank::set_trainable(bool trainable) {
    for (auto& p : params_) p.trainable = trainable;
}

void KernelBank::validate() const {
    auto expect_groups = [&](std::size_t n) {
        if (params_.size() != n) throw std::invalid_argument(to_string(kind_) + " kernel: wrong parameter count");
        for (const auto& p : params_) {
            if (p.size() != basis_) throw std::invalid_argument("kernel parameter '" + p.name + "' has wrong size");
            for (double v : p.values) {
                if (!std::isfinite(v)) throw std::invalid_argument("kernel parameter '" + p.name + "' not finite");
            }
        }
    };
    auto fail = [&](const std::string& msg) { throw std::invalid_argument(to_string(kind_) + " kernel: " + msg); };
    switch (kind_) {
        case KernelKind::Exponential:
            expect_groups(2);
            if (!(params_[0][0] > 0.0)) fail("omega must be positive");
            if (!(params_[1][0] >= 0.0)) fail("delta must be nonnegative");
            break;
        case KernelKind::Rayleigh:
            expect_groups(1);
            if (!(params_[0][0] > 0.0)) fail("omega must be positive");
            break;
        case KernelKind::Gaussian:
            expect_groups(1);
            if (!(params_[0][0] > 0.0)) fail("sigma must be positive");
            break;
        case KernelKind::Powerlaw:
            expect_groups(2);
            if (!(params_[0][0] > 1.0)) fail("omega must exceed 1");
            if (!(params_[1][0] > 0.0)) fail("delta must be positive");
            break;
        case KernelKind::Gate:
            expect_groups(2);
            if (!(params_[0][0] >= 0.0)) fail("omega must be nonnegative");
            if (!(params_[1][0] > 0.0)) fail("delta must be positive");
            break;
        case KernelKind::MultiGauss:
            expect_groups(2);
            for (std::size_t m = 0; m < basis_; ++m) {
                if (!(params_[1][m] > 0.0)) fail("widths must be positive");
                if (m > 0 && !(params_[0][m] > params_[0][m - 1])) fail("centers must be strictly increasing");
            }
            break;
    }
}

void KernelBank::project() {
    switch (kind_) {
        case KernelKind::Exponential:
            params_[0][0] = std::max(params_[0][0], kMinPositive);
            params_[1][0] = std::max(params_[1][0], 0.0);
            break;
        case KernelKind::Rayleigh:
        case KernelKind::Gaussian:
            params_[0][0] = std::max(params_[0][0], kMinPositive);
            break;
        case KernelKind::Powerlaw:
            params_[0][0] = std::max(params_[0][0], 1.0 + kMinPositive);
            params_[1][0] = std::max(params_[1][0], kMinPositive);
            break;
        case KernelKind::Gate:
            params_[0][0] = std::max(params_[0][0], 0.0);
            params_[1][0] = std::max(params_[1][0], kMinPositive);
            break;
        case KernelKind::MultiGauss:
            for (std::size_t m = 0; m < basis_; ++m) {
                params_[1][m] = std::max(params_[1][m], kMinPositive);
                if (m > 0) params_[0][m] = std::max(params_[0][m], params_[0][m - 1] + kMinPositive);
            }
            break;
    }
}

void KernelBank::value(double t, std::span<double> out) const {
    require_nonnegative(t);
    switch (kind_) {
        case KernelKind::Exponential: {
            const double omega = params_[0][0], delta = params_[1][0];
            out[0] = t >= delta ? omega * std::exp(-omega * (t - delta)) : 0.0;
            break;
        }
        case KernelKind::Rayleigh: {
            const double omega = params_[0][0];
            out[0] = omega * t * std::exp(-0.5 * omega * t * t);
            break;
        }
        case KernelKind::Gaussian:
            out[0] = normal_pdf(t, params_[0][0]);
            break;
        case KernelKind::Powerlaw: {
            const double omega = params_[0][0], delta = params_[1][0];
            out[0] = t < delta ? (omega - 1.0) / delta
                               : (omega - 1.0) / delta * std::pow(t / delta, -omega);
            break;
        }
        case KernelKind::Gate: {
            const double omega = params_[0][0], delta = params_[1][0];
            out[0] = (t >= omega && t <= omega + delta) ? 1.0 / delta : 0.0;
            break;
        }
        case KernelKind::MultiGauss:
            for (std::size_t m = 0; m < basis_; ++m) out[m] = normal_pdf(t - params_[0][m], params_[1][m]);
            break;
    }
}

std::vector<double> KernelBank::value(double t) const {
    std::vector<double> out(basis_);
    value(t, out);
    return out;
}

void KernelBank::integral(double t, std::span<double> out) const {
    require_nonnegative(t);
    switch (kind_) {
        case KernelKind::Exponential: {
            const double omega = params_[0][0], delta = params_[1][0];
            out[0] = t >= delta ? -std::expm1(-omega * (t - delta)) : 0.0;
            break;
        }
        case KernelKind::Rayleigh:
            out[0] = -std::expm1(-0.5 * params_[0][0] * t * t);
            break;
        case KernelKind::Gaussian:
            out[0] = 0.5 * std::erf(t / (params_[0][0] * std::numbers::sqrt2));
            break;
        case KernelKind::Powerlaw: {
            const double omega = params_[0][0], delta = params_[1][0];
            out[0] = (omega - 1.0) / delta * std::min(t, delta);
            if (t >= delta) out[0] += 1.0 - std::pow(t / delta, 1.0 - omega);
            break;
        }
        case KernelKind::Gate: {
            const double omega = params_[0][0], delta = params_[1][0];
            out[0] = std::clamp((t - omega) / delta, 0.0, 1.0);
            break;
        }
        case KernelKind::MultiGauss:
            for (std::size_t m = 0; m < basis_; ++m) out[m] = normal_mass(t, params_[0][m], params_[1][m]);
            break;
    }
}

std::vector<double> KernelBank::integral(double t) const {
    std::vector<double> out(basis_);
    integral(t, out);
    return out;
}

std::vector<double> KernelBank::total_mass() const {
    std::vector<double> out(basis_, 1.0);
    switch (kind_) {
        case KernelKind::Gaussian:
            out[0] = 0.5;
            break;
        case KernelKind::Powerlaw:
            out[0] = params_[0][0];
            break;
        case KernelKind::MultiGauss:
            for (std::size_t m = 0; m < basis_; ++m) {
                out[m] = 0.5 * (1.0 + std::erf(params_[0][m] / (params_[1][m] * std::numbers::sqrt2)));
            }
            break;
        default:
            break;
    }
    return out;
}

std::vector<double> KernelBank::upper_bound(double t0, double t1) const {
    t0 = std::max(t0, 0.0);
    t1 = std::max(t1, t0);
    std::vector<double> out(basis_);
    switch (kind_) {
        case KernelKind::Exponential: {
            const double omega = params_[0][0], delta = params_[1][0];
            out[0] = t1 < delta ? 0.0 : omega * std::exp(-omega * (std::max(t0, delta) - delta));
            break;
        }
        case KernelKind::Rayleigh: {
            const double mode = 1.0 / std::sqrt(params_[0][0]);
            const double at = std::clamp(mode, t0, t1);
            out = value(at);
            break;
        }
        case KernelKind::Gaussian:
        case KernelKind::Powerlaw:
            out = value(t0);
            break;
        case KernelKind::Gate: {
            const double omega = params_[0][0], delta = params_[1][0];
            out[0] = (t1 >= omega && t0 <= omega + delta) ? 1.0 / delta : 0.0;
            break;
        }
        case KernelKind::MultiGauss:
            for (std::size_t m = 0; m < basis_; ++m) {
                const double at = std::clamp(params_[0][m], t0, t1);
                out[m] = normal_pdf(at - params_[0][m], params_[1][m]);
            }
            break;
    }
    return out;
}

template <typename Fn>
void KernelBank::for_each_derivative(double t, Fn&& fn) const {
    require_nonnegative(t);
    auto emit = [&](std::size_t group, std::size_t index, std::size_t m, double dv, double di) {
        if (params_[group].trainable) fn(group, index, m, dv, di);
    };
    switch (kind_) {
        case KernelKind::Exponential: {
            const double omega = params_[0][0], delta = params_[1][0];
            if (t < delta) return;
            const double u = t - delta;
            const double e = std::exp(-omega * u);
            emit(0, 0, 0, e * (1.0 - omega * u), u * e);
            emit(1, 0, 0, omega * omega * e, -omega * e);
            return;
        }
        case KernelKind::Rayleigh: {
            const double omega = params_[0][0];
            const double half_sq = 0.5 * t * t;
            const double e = std::exp(-omega * half_sq);
            emit(0, 0, 0, t * e * (1.0 - omega * half_sq), half_sq * e);
            return;
        }
        case KernelKind::Gaussian: {
            const double sigma = params_[0][0];
            const double k = normal_pdf(t, sigma);
            emit(0, 0, 0, k * (t * t / (sigma * sigma * sigma) - 1.0 / sigma), -(t / sigma) * k);
            return;
        }
        case KernelKind::Powerlaw: {
            const double omega = params_[0][0], delta = params_[1][0];
            if (t < delta) {
                emit(0, 0, 0, 1.0 / delta, t / delta);
                emit(1, 0, 0, -(omega - 1.0) / (delta * delta), -(omega - 1.0) * t / (delta * delta));
            } else {
                const double log_ratio = std::log(t / delta);
                const double k = (omega - 1.0) / delta * std::exp(-omega * log_ratio);
                const double tail = std::exp((1.0 - omega) * log_ratio);
                emit(0, 0, 0, k * (1.0 / (omega - 1.0) - log_ratio), 1.0 + log_ratio * tail);
                emit(1, 0, 0, k * (omega - 1.0) / delta, -(omega - 1.0) * tail / delta);
            }
            return;
        }
        case KernelKind::Gate: {
            const double omega = params_[0][0], delta = params_[1][0];
            if (t < omega || t >= omega + delta) return;
            emit(0, 0, 0, 0.0, -1.0 / delta);
            emit(1, 0, 0, -1.0 / (delta * delta), -(t - omega) / (delta * delta));
            return;
        }
        case KernelKind::MultiGauss:
            for (std::size_t m = 0; m < basis_; ++m) {
                const double c = params_[0][m], s = params_[1][m];
                const double k = normal_pdf(t - c, s);
                const double k0 = normal_pdf(c, s);
                emit(0, m, m, k * (t - c) / (s * s), k0 - k);
                emit(1, m, m, k * ((t - c) * (t - c) / (s * s * s) - 1.0 / s), -((t - c) / s) * k - (c / s) * k0);
            }
            return;
    }
}

std::vector<KernelParamGrad> KernelBank::param_grad(double t) const {
    std::vector<KernelParamGrad> out;
    for (const auto& p : params_) {
        for (std::size_t k = 0; k < p.size(); ++k) {
            out.push_back({p.name, k, std::vector<double>(basis_, 0.0), std::vector<double>(basis_, 0.0)});
        }
    }
    auto slot = [&](std::size_t group, std::size_t index) -> KernelParamGrad& {
        std::size_t offset = 0;
        for (std::size_t g = 0; g < group; ++g) offset += params_[g].size();
        return out[offset + index];
    };
    for_each_derivative(t, [&](std::size_t group, std::size_t index, std::size_t m, double dv, double di) {
        auto& s = slot(group, index);
        s.d_value[m] = dv;
        s.d_integral[m] = di;
    });
    return out;
}

void KernelBank::accumulate_value_grad(double t, std::span<const double> weights, GradientBlock g) const {
    for_each_derivative(t, [&](std::size_t group, std::size_t index, std::size_t m, double dv, double) {
        g[group][index] += weights[m] * dv;
    });
}

void KernelBank::accumulate_integral_grad(double t, std::span<const double> weights, GradientBlock g) const {
    for_each_derivative(t, [&](std::size_t group, std::size_t index, std::size_t m, double, double di) {
        g[group][index] += weights[m] * di;
    });
}

}  // namespace ppkit
