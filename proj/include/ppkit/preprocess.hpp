#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ppkit/core_data.hpp"

namespace ppkit {

enum class PairingMethod { Random, Feature };

struct SimilarityConfig {
    PairingMethod method{PairingMethod::Random};
    /// Gaussian bandwidths; nullopt selects the median heuristic.
    std::optional<double> time_bandwidth;
    std::optional<double> feature_bandwidth;
    std::uint64_t rng_seed{0};

    void validate() const;
};

/// Row-major |db1| x |db2| matrix of partner-selection probabilities. Each row
/// sums to one. `favor_dissimilar` selects the superposing weights.
std::vector<std::vector<double>> pairing_probabilities(const Database& db1, const Database& db2,
                                                       const SimilarityConfig& cfg,
                                                       bool favor_dissimilar);

/// Appends a partner from db2 to every db1 sequence, shifted to start at the
/// leader's t_stop.
Database stitching(const Database& db1, const Database& db2, const SimilarityConfig& cfg);

/// Merges every db1 sequence with a partner from db2 on a shared timeline.
Database superposing(const Database& db1, const Database& db2, const SimilarityConfig& cfg);

/// Row-major bins x C counts for one sequence.
struct CountMatrix {
    std::size_t bins{0};
    std::size_t types{0};
    std::vector<std::size_t> counts;

    std::size_t at(std::size_t b, std::size_t c) const { return counts[b * types + c]; }
};

std::vector<CountMatrix> aggregating(const Database& db, double bin_width);

struct TrainingSample {
    std::size_t target_type{0};
    double target_time{0.0};
    double prev_time{0.0};
    /// Oldest first; left-padded with type `C` at time t_start.
    std::vector<std::size_t> history_types;
    std::vector<double> history_times;
    std::size_t seq_index{0};
    std::optional<std::vector<double>> seq_feature;
};

using Batch = std::vector<TrainingSample>;

/// Builds the full sample population once and serves per-epoch batch orders.
class EventSampler {
public:
    EventSampler(const Database& db, std::size_t memory_size);

    std::size_t size() const { return samples_.size(); }
    std::size_t memory_size() const { return memory_size_; }
    const TrainingSample& operator[](std::size_t i) const { return samples_[i]; }
    const std::vector<TrainingSample>& samples() const { return samples_; }

    /// Index batches partitioning a permutation of the population. Without
    /// shuffling the order is (sequence, event).
    std::vector<std::vector<std::size_t>> batch_indices(std::size_t batch_size, bool shuffle,
                                                        std::uint64_t seed) const;

private:
    std::size_t memory_size_;
    std::vector<TrainingSample> samples_;
};

/// History sample for event `i` of `seq` (index `seq_index`, C types).
TrainingSample make_sample(const EventSequence& seq, std::size_t seq_index, std::size_t i,
                           std::size_t memory_size, std::size_t num_types);

std::vector<Batch> make_samples(const Database& db, std::size_t memory_size, std::size_t batch_size,
                                bool shuffle, std::uint64_t rng_seed);

}  // namespace ppkit
