#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ppkit/core_data.hpp"
#include "ppkit/learning.hpp"
#include "ppkit/model.hpp"

namespace ppkit {

/// A named model recipe: composition, training loss and the parameter groups
/// kept nonnegative during training.
struct Preset {
    std::string name;
    Composition composition;
    LossKind loss{LossKind::MaxLogLike};
    std::optional<std::set<std::string>> nonnegative;
};

const std::vector<std::string>& preset_names();
bool is_preset(const std::string& name);

/// Typical inter-event gaps of a corpus, used to scale default kernels.
struct TimeScale {
    double mean_gap{1.0};
    /// 95th percentile gap.
    double tail_gap{1.0};
};
TimeScale time_scale(const Database& db);

/// Default kernel bank of a family sized to the corpus time scale.
KernelBank default_kernels(KernelKind kind, const TimeScale& scale, std::size_t basis);

/// Throws std::invalid_argument listing the valid names for unknown presets.
Preset make_preset(const std::string& name, const TimeScale& scale, std::size_t basis = 4);

}  // namespace ppkit
