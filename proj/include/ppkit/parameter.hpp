#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ppkit {

/// Role tags drive regularization and projection defaults.
enum class ParamRole { Exogenous, Impact, Kernel, Embedding, Data };

/// A named, shaped group of learnable scalars stored row-major.
struct Parameter {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
    ParamRole role{ParamRole::Exogenous};
    bool trainable{true};

    Parameter() = default;
    Parameter(std::string n, std::vector<std::size_t> s, ParamRole r, bool train = true)
        : name(std::move(n)), shape(std::move(s)), role(r), trainable(train) {
        std::size_t count = 1;
        for (auto d : shape) count *= d;
        values.assign(count, 0.0);
    }

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Gradient storage aligned with a list of parameters.
using GradientSet = std::vector<std::vector<double>>;
/// The contiguous slice of a GradientSet owned by one model component.
using GradientBlock = std::span<std::vector<double>>;

inline GradientSet zeros_like(const std::vector<const Parameter*>& params) {
    GradientSet g;
    g.reserve(params.size());
    for (const auto* p : params) g.emplace_back(p->size(), 0.0);
    return g;
}

}  // namespace ppkit
