#include "ppkit/activation.hpp"

#include <cmath>
#include <stdexcept>

namespace ppkit {

namespace {

// log(1 + exp(y)) without overflow.
double log1p_exp(double y) { return y > 0.0 ? y + std::log1p(std::exp(-y)) : std::log1p(std::exp(y)); }

double sigmoid(double y) {
    if (y >= 0.0) return 1.0 / (1.0 + std::exp(-y));
    const double e = std::exp(y);
    return e / (1.0 + e);
}

}  // namespace

double Activation::operator()(double x) const {
    switch (kind) {
        case ActivationKind::Identity: return x;
        case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
        case ActivationKind::Softplus:
            return printed_softplus ? log1p_exp(-beta * x) / beta : log1p_exp(beta * x) / beta;
    }
    return x;
}

double Activation::derivative(double x) const {
    switch (kind) {
        case ActivationKind::Identity: return 1.0;
        case ActivationKind::ReLU: return x > 0.0 ? 1.0 : 0.0;
        case ActivationKind::Softplus: return printed_softplus ? -sigmoid(-beta * x) : sigmoid(beta * x);
    }
    return 1.0;
}

void Activation::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("activation beta must be positive");
}

std::string to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::Identity: return "identity";
        case ActivationKind::ReLU: return "relu";
        case ActivationKind::Softplus: return "softplus";
    }
    return "unknown";
}

ActivationKind parse_activation_kind(const std::string& name) {
    if (name == "identity") return ActivationKind::Identity;
    if (name == "relu") return ActivationKind::ReLU;
    if (name == "softplus") return ActivationKind::Softplus;
    throw std::invalid_argument("unknown activation '" + name + "' (identity|relu|softplus)");
}

}  // namespace ppkit
