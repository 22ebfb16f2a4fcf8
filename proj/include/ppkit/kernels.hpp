#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ppkit/parameter.hpp"

namespace ppkit {

enum class KernelKind { Exponential, Rayleigh, Gaussian, Powerlaw, Gate, MultiGauss };

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& name);

/// Derivatives of every basis value and integral w.r.t. one scalar parameter.
struct KernelParamGrad {
    std::string parameter;
    std::size_t index{0};
    std::vector<double> d_value;
    std::vector<double> d_integral;
};

/// A bank of M decay kernels sharing one family. Values, integrals from 0 and
/// parameter derivatives are all closed form. Arguments must be nonnegative.
///
/// Families and parameters:
///   Exponential  omega > 0, delta >= 0   omega exp(-omega (t - delta)) for t >= delta
///   Rayleigh     omega > 0               omega t exp(-omega t^2 / 2)
///   Gaussian     sigma > 0               N(t; 0, sigma^2) restricted to t >= 0 (mass 1/2)
///   Powerlaw     omega > 1, delta > 0    (omega-1)/delta below delta, power tail above
///   Gate         omega >= 0, delta > 0   1/delta on [omega, omega + delta]
///   MultiGauss   centers, widths > 0     N(t; center_m, width_m^2), m = 1..M
///
/// At discontinuities (Gate edges, Exponential and Powerlaw at delta) the
/// parameter derivatives are taken from the right-hand branch in t.
class KernelBank {
public:
    static KernelBank exponential(double omega, double delta = 0.0);
    static KernelBank rayleigh(double omega);
    static KernelBank gaussian(double sigma);
    static KernelBank powerlaw(double omega, double delta);
    static KernelBank gate(double omega, double delta);
    static KernelBank multi_gauss(std::vector<double> centers, std::vector<double> widths);
    /// Centers evenly spaced on [0, t_max], widths half the spacing.
    static KernelBank multi_gauss_grid(std::size_t basis, double t_max);
    /// Rebuilds a bank from stored parameter groups (validated).
    static KernelBank from_parameters(KernelKind kind, std::vector<Parameter> params);

    KernelKind kind() const { return kind_; }
    std::size_t size() const { return basis_; }

    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }
    void set_trainable(bool trainable);

    /// Throws std::invalid_argument on any violated parameter constraint.
    void validate() const;
    /// Clamps parameters back into their admissible domain.
    void project();

    void value(double t, std::span<double> out) const;
    std::vector<double> value(double t) const;
    void integral(double t, std::span<double> out) const;
    std::vector<double> integral(double t) const;
    /// Integral over [0, inf).
    std::vector<double> total_mass() const;
    /// Per-basis bound on sup of the value over [t0, t1].
    std::vector<double> upper_bound(double t0, double t1) const;

    /// Non-trainable parameters report zero derivatives.
    std::vector<KernelParamGrad> param_grad(double t) const;

    /// g[p][k] += sum_m weights[m] * d value_m(t) / d params[p][k].
    void accumulate_value_grad(double t, std::span<const double> weights, GradientBlock g) const;
    /// As above for the integral from 0 to t.
    void accumulate_integral_grad(double t, std::span<const double> weights, GradientBlock g) const;

private:
    KernelBank(KernelKind kind, std::size_t basis, std::vector<Parameter> params);

    // fn(group, index, basis, d_value, d_integral) for each nonzero entry.
    template <typename Fn>
    void for_each_derivative(double t, Fn&& fn) const;

    KernelKind kind_;
    std::size_t basis_;
    std::vector<Parameter> params_;
};

}  // namespace ppkit
