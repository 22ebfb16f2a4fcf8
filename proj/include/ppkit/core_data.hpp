#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace ppkit {

using Label = std::variant<long long, double>;

/// Dense column-major matrix: `rows` feature dimensions by `cols` event types.
struct FeatureMatrix {
    std::size_t rows{0};
    std::size_t cols{0};
    std::vector<double> data;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[c * rows + r]; }
    double at(std::size_t r, std::size_t c) const { return data[c * rows + r]; }
    const double* column(std::size_t c) const { return data.data() + c * rows; }

    bool operator==(const FeatureMatrix&) const = default;
};

struct EventSequence {
    std::vector<double> times;
    std::vector<std::size_t> events;
    std::optional<std::vector<double>> seq_feature;
    double t_start{0.0};
    double t_stop{0.0};
    std::optional<Label> label;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }

    bool operator==(const EventSequence&) const = default;
};

/// In-memory corpus. Event types are dense indices in [0, num_types); names
/// live only in the bijective maps.
struct Database {
    std::size_t num_types{0};
    std::map<std::string, std::size_t> type2idx;
    std::vector<std::string> idx2type;
    std::map<std::string, std::size_t> seq2idx;
    std::vector<std::string> idx2seq;
    std::vector<EventSequence> sequences;
    std::optional<FeatureMatrix> event_features;

    std::size_t num_events() const;
    /// Registers a type name if unseen and returns its index.
    std::size_t intern_type(const std::string& name);
    /// Appends a named sequence; throws if the name is taken.
    std::size_t add_sequence(const std::string& name, EventSequence seq);
    /// Width of the sequence features, or nullopt unless every sequence carries one.
    std::optional<std::size_t> seq_feature_dim() const;

    bool operator==(const Database&) const = default;
};

struct Violation {
    std::optional<std::size_t> seq_index;
    std::string field;
    std::string message;
};

std::string to_string(const Violation& v);

/// One entry per violated invariant; empty iff the database is consistent.
std::vector<Violation> validate_database(const Database& db);

/// Keeps only the listed types, densely renumbered in ascending index order.
/// Throws std::invalid_argument("no types retained") on an empty set.
Database relabel_types(const Database& db, const std::set<std::size_t>& keep);

}  // namespace ppkit
