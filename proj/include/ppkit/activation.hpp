#pragma once

#include <string>

namespace ppkit {

enum class ActivationKind { Identity, ReLU, Softplus };

/// Pointwise link g. Softplus is log(1 + exp(beta x)) / beta; `printed_softplus`
/// switches to the sign-flipped log(1 + exp(-beta x)) / beta variant.
struct Activation {
    ActivationKind kind{ActivationKind::Identity};
    double beta{1.0};
    bool printed_softplus{false};

    static Activation identity() { return {}; }
    static Activation relu() { return {ActivationKind::ReLU, 1.0, false}; }
    static Activation softplus(double beta = 1.0) { return {ActivationKind::Softplus, beta, false}; }

    double operator()(double x) const;
    double derivative(double x) const;
    /// True when g is non-decreasing (every form except the printed softplus).
    bool increasing() const { return !(kind == ActivationKind::Softplus && printed_softplus); }
    void validate() const;

    bool operator==(const Activation&) const = default;
};

std::string to_string(ActivationKind kind);
ActivationKind parse_activation_kind(const std::string& name);

}  // namespace ppkit
