#pragma once

#include <cstddef>
#include <vector>

namespace ppkit {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Rules are computed once per node count and cached; thread-safe.
const GaussLegendreRule& gauss_legendre(std::size_t n);

}  // namespace ppkit
