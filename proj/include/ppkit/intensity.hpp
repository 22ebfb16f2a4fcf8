#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ppkit/model.hpp"
#include "ppkit/parameter.hpp"
#include "ppkit/preprocess.hpp"

namespace ppkit {

/// Past events visible to the intensity, oldest first. Entries of type C
/// (one past the last real type) are padding and contribute nothing.
struct HistoryView {
    std::span<const std::size_t> types;
    std::span<const double> times;
};

HistoryView history_of(const TrainingSample& s);
SequenceContext context_of(const TrainingSample& s);

/// Per-sample derivative seeds: d loss / d lambda_{c_i}(t_i) and
/// d loss / d (expected count of type c).
struct SampleAdjoint {
    double intensity{0.0};
    std::vector<double> counts;
};

/// Gradient accumulation buffers for one worker. `impact_adjoint` collects
/// d loss / d alpha ([C][C][M]) and is pulled back through the impact model
/// once in finish().
struct GradientAccumulator {
    GradientSet grads;
    std::vector<double> impact_adjoint;

    void merge(const GradientAccumulator& other);
};

/// Read-only evaluation of a HawkesModel with the coefficient table cached.
/// Many evaluators may share one model concurrently.
class IntensityEvaluator {
public:
    explicit IntensityEvaluator(const HawkesModel& model);

    const HawkesModel& model() const { return model_; }
    std::size_t num_types() const { return num_types_; }

    double exo(std::size_t c, const SequenceContext& ctx) const { return model_.exogenous.value(c, ctx); }
    std::span<const double> alpha(std::size_t c, std::size_t source) const {
        return {table_.data() + (c * num_types_ + source) * basis_, basis_};
    }

    /// Argument of the outer activation for type c at time t.
    double pre_activation(std::size_t c, double t, const HistoryView& h, const SequenceContext& ctx) const;
    double intensity(std::size_t c, double t, const HistoryView& h, const SequenceContext& ctx) const;
    void intensities(double t, const HistoryView& h, const SequenceContext& ctx, std::span<double> out) const;

    /// Integrals of each lambda_c over [t0, t1] with the history held fixed.
    /// Closed form for identity outer activation, Gauss-Legendre otherwise.
    void expected_counts(double t0, double t1, const HistoryView& h, const SequenceContext& ctx,
                         std::span<double> out) const;
    void expected_counts_quadrature(double t0, double t1, const HistoryView& h, const SequenceContext& ctx,
                                    std::size_t nodes, std::span<double> out) const;

    /// Per-type bound on sup lambda_c over [t0, t1] with the history fixed.
    void intensity_upper_bound(double t0, double t1, const HistoryView& h, const SequenceContext& ctx,
                               std::span<double> out) const;

    GradientAccumulator make_accumulator() const;
    /// Adds the sample's gradient contributions for the given adjoints.
    void backward(const TrainingSample& s, const SampleAdjoint& adj, GradientAccumulator& acc) const;
    /// Pulls impact adjoints back to parameters and returns the full gradient.
    GradientSet finish(GradientAccumulator acc) const;

private:
    void backward_intensity(const TrainingSample& s, double adjoint, GradientAccumulator& acc) const;
    void backward_counts_exact(const TrainingSample& s, std::span<const double> adj, GradientAccumulator& acc) const;
    void backward_counts_quadrature(const TrainingSample& s, std::span<const double> adj,
                                    GradientAccumulator& acc) const;

    const HawkesModel& model_;
    std::size_t num_types_;
    std::size_t basis_;
    std::vector<double> table_;
};

// Single-shot helpers mirroring the evaluator.

double exo_value(const HawkesModel& model, std::size_t c, const SequenceContext& ctx = {});
std::vector<double> impact_coeff(const HawkesModel& model, std::size_t c, std::size_t source);
/// lambda_c at the sample's target time.
double intensity(const HawkesModel& model, const TrainingSample& sample, std::size_t c);
/// Integrals of every lambda_c over [prev_time, target_time].
std::vector<double> expected_counts(const HawkesModel& model, const TrainingSample& sample);
std::vector<double> expected_counts_quadrature(const HawkesModel& model, const TrainingSample& sample,
                                               std::size_t nodes);
/// Gradient of sum over samples of (adj.intensity * lambda_{c_i}(t_i) + adj.counts . counts).
GradientSet model_param_grad(const HawkesModel& model, std::span<const TrainingSample> batch,
                             std::span<const SampleAdjoint> adjoints);
/// Row-major C x C total impact mass: entry (c, c') = sum_m alpha_{c c' m} * mass_m.
std::vector<double> infectivity_matrix(const HawkesModel& model);

}  // namespace ppkit
