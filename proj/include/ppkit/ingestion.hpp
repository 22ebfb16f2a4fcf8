#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ppkit/core_data.hpp"

namespace ppkit {

struct ColumnMapping {
    std::string seq_id{"id"};
    std::string time{"time"};
    std::string event{"event"};
    /// Optional per-row window bounds; when empty the window is the event span.
    std::string t_start;
    std::string t_stop;

    void validate() const;
};

enum class FeatureKind { Categorical, Numerical };
enum class Normalization { None, MinMax, ZScore };

struct FeatureDomainSpec {
    std::vector<std::pair<std::string, FeatureKind>> columns;
    Normalization normalize{Normalization::None};

    void validate() const;
};

FeatureKind parse_feature_kind(const std::string& s);
Normalization parse_normalization(const std::string& s);

/// One sequence per distinct id, events stably sorted by time, type and
/// sequence indices assigned by first appearance.
Database load_sequences_csv(const std::string& path, const ColumnMapping& mapping);

/// Sequences absent from the feature file receive an all-zero raw vector.
Database load_seq_features_csv(const std::string& path, const std::string& seq_domain,
                               const FeatureDomainSpec& spec, Database db);

/// Result stored as the D_e x C event_features matrix.
Database load_event_features_csv(const std::string& path, const std::string& event_domain,
                                 const FeatureDomainSpec& spec, Database db);

}  // namespace ppkit
