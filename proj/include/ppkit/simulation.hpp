#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ppkit/core_data.hpp"
#include "ppkit/model.hpp"

namespace ppkit {

struct SimConfig {
    double t_begin{0.0};
    double t_end{1.0};
    /// Observed events conditioning the run; only those at or before t_begin are used.
    std::optional<EventSequence> seed_sequence;
    /// Row of the learned sequence embedding, if any.
    std::optional<std::size_t> seq_index;
    std::size_t max_events{1'000'000};
    std::uint64_t rng_seed{0};
    double bound_refresh_width{1.0};

    void validate() const;
};

struct SimStats {
    std::size_t candidates{0};
    std::size_t accepted{0};
    /// Largest observed lambda(t) / envelope ratio; never above one.
    double max_ratio{0.0};
};

/// Thrown when a candidate's intensity exceeds the thinning envelope.
struct EnvelopeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ogata thinning on (t_begin, t_end]. The returned sequence spans
/// [t_begin, t_end] and carries the seed sequence's feature vector.
EventSequence simulate(const HawkesModel& model, const SimConfig& cfg, SimStats* stats = nullptr);

struct PredictConfig {
    std::size_t replicates{100};
    std::uint64_t rng_seed{0};
    double bound_refresh_width{1.0};
    std::size_t max_events{1'000'000};
    std::size_t threads{1};
};

struct Prediction {
    /// Per sequence, mean count of each type in (t0, t1].
    std::vector<std::vector<double>> mean;
    /// Standard error of each mean.
    std::vector<std::vector<double>> std_error;
};

/// Raised when the horizon starts before a sequence's observation window ends.
struct PredictPreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// RNG seed of replicate `rep` of sequence `seq` in predict().
std::uint64_t replicate_seed(std::uint64_t base, std::size_t seq, std::size_t rep);

/// Monte-Carlo expected counts from simulated continuations of every sequence.
Prediction predict(const HawkesModel& model, const Database& db, double t0, double t1,
                   const PredictConfig& cfg = {});

/// Increments of the total compensator between consecutive events, the first
/// measured from t_start.
std::vector<double> time_rescaling_residuals(const HawkesModel& model, const EventSequence& seq,
                                             std::optional<std::size_t> seq_index = std::nullopt);

}  // namespace ppkit
