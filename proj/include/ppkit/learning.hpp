#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ppkit/core_data.hpp"
#include "ppkit/intensity.hpp"
#include "ppkit/model.hpp"
#include "ppkit/preprocess.hpp"

namespace ppkit {

enum class LossKind { MaxLogLike, LeastSquare, CrossEntropy };

/// "mle", "lse", "ce".
std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

// Batch losses, summed over samples.

/// -sum(log lambda_{c_i}(t_i) - sum_c Lambda_c) over [t_{i-1}, t_i].
double loss_mle(const HawkesModel& model, std::span<const TrainingSample> batch);
/// sum ||Lambda - onehot(c_i)||^2.
double loss_lse(const HawkesModel& model, std::span<const TrainingSample> batch);
/// -sum log softmax(Lambda)[c_i].
double loss_ce(const HawkesModel& model, std::span<const TrainingSample> batch);
double loss(const HawkesModel& model, LossKind kind, std::span<const TrainingSample> batch);

/// Loss of one sample; fills `adjoint` with its seeds when non-null.
double sample_loss(const IntensityEvaluator& eval, LossKind kind, const TrainingSample& s,
                   SampleAdjoint* adjoint = nullptr);

struct LossAndGrad {
    double value{0.0};
    GradientSet grad;
};

/// Summed loss and its gradient over `batch`, split across `threads` shards.
/// Results are deterministic for a fixed thread count.
LossAndGrad loss_and_grad(const HawkesModel& model, LossKind kind, std::span<const TrainingSample> batch,
                          std::size_t threads = 1);

enum class OptimizerKind { SGD, Adam };
std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct AdamSettings {
    double beta1{0.9};
    double beta2{0.999};
    double epsilon{1e-8};
};

struct OptimizerState {
    GradientSet first_moment;
    GradientSet second_moment;
    std::size_t step{0};
};

/// Standard bias-corrected Adam. Non-trainable groups are left untouched.
void adam_step(std::span<Parameter* const> params, const GradientSet& grads, double lr, const AdamSettings& cfg,
               OptimizerState& state);
/// theta <- theta - lr * g on trainable groups.
void sgd_step(std::span<Parameter* const> params, const GradientSet& grads, double lr);

struct FitConfig {
    std::size_t epochs{10};
    std::size_t batch_size{128};
    double learning_rate{0.01};
    double lr_decay_gamma{1.0};
    OptimizerKind optimizer{OptimizerKind::Adam};
    AdamSettings adam{};
    double l1_weight{0.0};
    double l2_weight{0.0};
    /// Roles the L1 penalty applies to.
    std::set<ParamRole> l1_roles{ParamRole::Impact};
    /// Parameter groups clipped at zero after every step; none when unset.
    std::optional<std::set<std::string>> nonnegative;
    /// Overrides the model's history length when set.
    std::optional<std::size_t> memory_size;
    std::uint64_t rng_seed{0};
    double validation_fraction{0.0};
    bool shuffle{true};
    std::size_t threads{1};

    void validate() const;
};

/// l1 * sum|theta| over l1 roles + l2 * sum theta^2 over all trainable groups.
double regularization(const HawkesModel& model, const FitConfig& cfg);
/// Adds the (sub)gradient of regularization() into `grads`; sign(0) = 0.
void add_regularization_grad(const HawkesModel& model, const FitConfig& cfg, GradientSet& grads);
/// Clips the named groups at zero. Throws on unknown names.
void project_nonnegative(HawkesModel& model, const std::set<std::string>& groups);

struct EpochReport {
    std::size_t epoch{0};
    /// Mean per-sample loss over the epoch's steps.
    double train_loss{0.0};
    /// Mean per-sample loss over the training split after the epoch.
    double train_eval_loss{0.0};
    std::optional<double> val_loss;
    double lr{0.0};
    double seconds{0.0};

    std::string to_json() const;
};

struct FitReport {
    std::vector<EpochReport> epochs;
    std::size_t train_samples{0};
    std::size_t val_samples{0};

    /// One JSON object per epoch, newline terminated.
    std::string to_json_lines() const;
};

/// Splits sequence indices into (train, validation) by a seeded shuffle.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_sequences(std::size_t num_sequences,
                                                                              double validation_fraction,
                                                                              std::uint64_t seed);

FitReport fit(HawkesModel& model, const Database& db, const FitConfig& cfg, LossKind kind,
              const std::function<void(const EpochReport&)>& on_epoch = {});

/// Mean per-sample loss over every sample of `db`. Throws "no samples" when empty.
double validation(const HawkesModel& model, const Database& db, LossKind kind, std::size_t threads = 1);
/// Mean per-sample loss over the given samples.
double mean_loss(const HawkesModel& model, LossKind kind, std::span<const TrainingSample> samples,
                 std::size_t threads = 1);

/// Full-sequence log-likelihood including the tail [t_last, t_stop]. Evaluation only.
double sequence_log_likelihood(const HawkesModel& model, const EventSequence& seq, std::size_t seq_index);

}  // namespace ppkit
