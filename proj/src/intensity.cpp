#include "ppkit/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ppkit/quadrature.hpp"

namespace ppkit {

HistoryView history_of(const TrainingSample& s) { return {s.history_types, s.history_times}; }

SequenceContext context_of(const TrainingSample& s) {
    SequenceContext ctx;
    if (s.seq_feature) ctx.seq_feature = *s.seq_feature;
    ctx.seq_index = s.seq_index;
    return ctx;
}

void GradientAccumulator::merge(const GradientAccumulator& other) {
    for (std::size_t p = 0; p < grads.size(); ++p) {
        for (std::size_t k = 0; k < grads[p].size(); ++k) grads[p][k] += other.grads[p][k];
    }
    for (std::size_t k = 0; k < impact_adjoint.size(); ++k) impact_adjoint[k] += other.impact_adjoint[k];
}

IntensityEvaluator::IntensityEvaluator(const HawkesModel& model)
    : model_(model),
      num_types_(model.num_types()),
      basis_(model.basis()),
      table_(model.impact.coefficient_table()) {
    if (model.impact.basis() != basis_) throw std::invalid_argument("impact model and kernel bank disagree on M");
}

double IntensityEvaluator::pre_activation(std::size_t c, double t, const HistoryView& h,
                                          const SequenceContext& ctx) const {
    double x = exo(c, ctx);
    std::vector<double> kv(basis_);
    for (std::size_t j = 0; j < h.types.size(); ++j) {
        if (h.types[j] >= num_types_ || !(h.times[j] < t)) continue;
        model_.kernels.value(t - h.times[j], kv);
        const auto a = alpha(c, h.types[j]);
        for (std::size_t m = 0; m < basis_; ++m) x += a[m] * kv[m];
    }
    return x;
}

double IntensityEvaluator::intensity(std::size_t c, double t, const HistoryView& h,
                                     const SequenceContext& ctx) const {
    return model_.outer(pre_activation(c, t, h, ctx));
}

void IntensityEvaluator::intensities(double t, const HistoryView& h, const SequenceContext& ctx,
                                     std::span<double> out) const {
    std::vector<double> kv(basis_);
    for (std::size_t c = 0; c < num_types_; ++c) out[c] = exo(c, ctx);
    for (std::size_t j = 0; j < h.types.size(); ++j) {
        if (h.types[j] >= num_types_ || !(h.times[j] < t)) continue;
        model_.kernels.value(t - h.times[j], kv);
        for (std::size_t c = 0; c < num_types_; ++c) {
            const auto a = alpha(c, h.types[j]);
            for (std::size_t m = 0; m < basis_; ++m) out[c] += a[m] * kv[m];
        }
    }
    for (std::size_t c = 0; c < num_types_; ++c) out[c] = model_.outer(out[c]);
}

void IntensityEvaluator::expected_counts(double t0, double t1, const HistoryView& h, const SequenceContext& ctx,
                                         std::span<double> out) const {
    if (t0 > t1) throw std::invalid_argument("expected_counts: interval start exceeds its end");
    if (model_.outer.kind != ActivationKind::Identity) {
        expected_counts_quadrature(t0, t1, h, ctx, model_.quadrature_nodes, out);
        return;
    }
    const double dt = t1 - t0;
    for (std::size_t c = 0; c < num_types_; ++c) out[c] = exo(c, ctx) * dt;
    std::vector<double> hi(basis_), lo(basis_);
    for (std::size_t j = 0; j < h.types.size(); ++j) {
        if (h.types[j] >= num_types_) continue;
        model_.kernels.integral(std::max(t1 - h.times[j], 0.0), hi);
        model_.kernels.integral(std::max(t0 - h.times[j], 0.0), lo);
        for (std::size_t c = 0; c < num_types_; ++c) {
            const auto a = alpha(c, h.types[j]);
            for (std::size_t m = 0; m < basis_; ++m) out[c] += a[m] * (hi[m] - lo[m]);
        }
    }
}

void IntensityEvaluator::expected_counts_quadrature(double t0, double t1, const HistoryView& h,
                                                    const SequenceContext& ctx, std::size_t nodes,
                                                    std::span<double> out) const {
    if (t0 > t1) throw std::invalid_argument("expected_counts: interval start exceeds its end");
    std::fill(out.begin(), out.end(), 0.0);
    if (t1 == t0) return;
    const auto& rule = gauss_legendre(nodes);
    const double half = 0.5 * (t1 - t0);
    std::vector<double> lam(num_types_);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double s = t0 + half * (1.0 + rule.nodes[q]);
        intensities(s, h, ctx, lam);
        for (std::size_t c = 0; c < num_types_; ++c) out[c] += half * rule.weights[q] * lam[c];
    }
}

void IntensityEvaluator::intensity_upper_bound(double t0, double t1, const HistoryView& h,
                                               const SequenceContext& ctx, std::span<double> out) const {
    std::vector<double> hi(num_types_), lo(num_types_);
    for (std::size_t c = 0; c < num_types_; ++c) hi[c] = lo[c] = exo(c, ctx);
    for (std::size_t j = 0; j < h.types.size(); ++j) {
        if (h.types[j] >= num_types_ || !(h.times[j] < t1)) continue;
        const auto ub = model_.kernels.upper_bound(t0 - h.times[j], t1 - h.times[j]);
        for (std::size_t c = 0; c < num_types_; ++c) {
            const auto a = alpha(c, h.types[j]);
            for (std::size_t m = 0; m < basis_; ++m) {
                if (a[m] > 0.0) hi[c] += a[m] * ub[m];
                else lo[c] += a[m] * ub[m];
            }
        }
    }
    for (std::size_t c = 0; c < num_types_; ++c) {
        const double bound = model_.outer.increasing() ? model_.outer(hi[c]) : model_.outer(lo[c]);
        out[c] = std::max(bound, 0.0);
    }
}

GradientAccumulator IntensityEvaluator::make_accumulator() const {
    GradientAccumulator acc;
    acc.grads = zeros_like(model_.parameters());
    acc.impact_adjoint.assign(num_types_ * num_types_ * basis_, 0.0);
    return acc;
}

void IntensityEvaluator::backward(const TrainingSample& s, const SampleAdjoint& adj, GradientAccumulator& acc) const {
    if (adj.intensity != 0.0) backward_intensity(s, adj.intensity, acc);
    if (adj.counts.empty()) return;
    if (adj.counts.size() != num_types_) throw std::invalid_argument("count adjoint has wrong length");
    if (std::all_of(adj.counts.begin(), adj.counts.end(), [](double v) { return v == 0.0; })) return;
    if (model_.outer.kind == ActivationKind::Identity) backward_counts_exact(s, adj.counts, acc);
    else backward_counts_quadrature(s, adj.counts, acc);
}

void IntensityEvaluator::backward_intensity(const TrainingSample& s, double adjoint, GradientAccumulator& acc) const {
    const auto h = history_of(s);
    const auto ctx = context_of(s);
    const std::size_t c = s.target_type;
    const double t = s.target_time;
    const double dx = adjoint * model_.outer.derivative(pre_activation(c, t, h, ctx));
    if (dx == 0.0) return;

    GradientBlock all(acc.grads);
    model_.exogenous.backward(c, ctx, dx, all.subspan(0, model_.impact_offset()));
    auto kernel_block = all.subspan(model_.kernel_offset());
    std::vector<double> kv(basis_), w(basis_);
    for (std::size_t j = 0; j < h.types.size(); ++j) {
        const std::size_t src = h.types[j];
        if (src >= num_types_ || !(h.times[j] < t)) continue;
        const double tau = t - h.times[j];
        model_.kernels.value(tau, kv);
        const auto a = alpha(c, src);
        double* adj_alpha = acc.impact_adjoint.data() + (c * num_types_ + src) * basis_;
        for (std::size_t m = 0; m < basis_; ++m) {
            adj_alpha[m] += dx * kv[m];
            w[m] = dx * a[m];
        }
        model_.kernels.accumulate_value_grad(tau, w, kernel_block);
    }
}

void IntensityEvaluator::backward_counts_exact(const TrainingSample& s, std::span<const double> adj,
                                               GradientAccumulator& acc) const {
    const auto h = history_of(s);
    const auto ctx = context_of(s);
    const double t0 = s.prev_time, t1 = s.target_time;
    GradientBlock all(acc.grads);
    auto exo_block = all.subspan(0, model_.impact_offset());
    auto kernel_block = all.subspan(model_.kernel_offset());
    for (std::size_t c = 0; c < num_types_; ++c) model_.exogenous.backward(c, ctx, adj[c] * (t1 - t0), exo_block);

    std::vector<double> hi(basis_), lo(basis_), w(basis_), neg(basis_);
    for (std::size_t j = 0; j < h.types.size(); ++j) {
        const std::size_t src = h.types[j];
        if (src >= num_types_) continue;
        const double b = std::max(t1 - h.times[j], 0.0);
        const double a0 = std::max(t0 - h.times[j], 0.0);
        model_.kernels.integral(b, hi);
        model_.kernels.integral(a0, lo);
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t c = 0; c < num_types_; ++c) {
            if (adj[c] == 0.0) continue;
            const auto a = alpha(c, src);
            double* adj_alpha = acc.impact_adjoint.data() + (c * num_types_ + src) * basis_;
            for (std::size_t m = 0; m < basis_; ++m) {
                adj_alpha[m] += adj[c] * (hi[m] - lo[m]);
                w[m] += adj[c] * a[m];
            }
        }
        for (std::size_t m = 0; m < basis_; ++m) neg[m] = -w[m];
        model_.kernels.accumulate_integral_grad(b, w, kernel_block);
        model_.kernels.accumulate_integral_grad(a0, neg, kernel_block);
    }
}

void IntensityEvaluator::backward_counts_quadrature(const TrainingSample& s, std::span<const double> adj,
                                                    GradientAccumulator& acc) const {
    const auto h = history_of(s);
    const auto ctx = context_of(s);
    const double t0 = s.prev_time, t1 = s.target_time;
    if (t1 == t0) return;
    GradientBlock all(acc.grads);
    auto exo_block = all.subspan(0, model_.impact_offset());
    auto kernel_block = all.subspan(model_.kernel_offset());

    const auto& rule = gauss_legendre(model_.quadrature_nodes);
    const double half = 0.5 * (t1 - t0);
    const std::size_t n_hist = h.types.size();
    std::vector<double> exo_adj(num_types_, 0.0), x(num_types_), dx(num_types_);
    std::vector<double> kv(n_hist * basis_), w(basis_);
    for (std::size_t c = 0; c < num_types_; ++c) x[c] = exo(c, ctx);
    const std::vector<double> base = x;

    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double sq = t0 + half * (1.0 + rule.nodes[q]);
        const double wq = half * rule.weights[q];
        x = base;
        for (std::size_t j = 0; j < n_hist; ++j) {
            const std::span<double> k(kv.data() + j * basis_, basis_);
            if (h.types[j] >= num_types_ || !(h.times[j] < sq)) {
                std::fill(k.begin(), k.end(), 0.0);
                continue;
            }
            model_.kernels.value(sq - h.times[j], k);
            for (std::size_t c = 0; c < num_types_; ++c) {
                const auto a = alpha(c, h.types[j]);
                for (std::size_t m = 0; m < basis_; ++m) x[c] += a[m] * k[m];
            }
        }
        for (std::size_t c = 0; c < num_types_; ++c) {
            dx[c] = adj[c] * wq * model_.outer.derivative(x[c]);
            exo_adj[c] += dx[c];
        }
        for (std::size_t j = 0; j < n_hist; ++j) {
            const std::size_t src = h.types[j];
            if (src >= num_types_ || !(h.times[j] < sq)) continue;
            const std::span<const double> k(kv.data() + j * basis_, basis_);
            std::fill(w.begin(), w.end(), 0.0);
            for (std::size_t c = 0; c < num_types_; ++c) {
                if (dx[c] == 0.0) continue;
                const auto a = alpha(c, src);
                double* adj_alpha = acc.impact_adjoint.data() + (c * num_types_ + src) * basis_;
                for (std::size_t m = 0; m < basis_; ++m) {
                    adj_alpha[m] += dx[c] * k[m];
                    w[m] += dx[c] * a[m];
                }
            }
            model_.kernels.accumulate_value_grad(sq - h.times[j], w, kernel_block);
        }
    }
    for (std::size_t c = 0; c < num_types_; ++c) model_.exogenous.backward(c, ctx, exo_adj[c], exo_block);
}

GradientSet IntensityEvaluator::finish(GradientAccumulator acc) const {
    GradientBlock all(acc.grads);
    model_.impact.backward(acc.impact_adjoint,
                           all.subspan(model_.impact_offset(), model_.impact.parameters().size()));
    return std::move(acc.grads);
}

double exo_value(const HawkesModel& model, std::size_t c, const SequenceContext& ctx) {
    return model.exogenous.value(c, ctx);
}

std::vector<double> impact_coeff(const HawkesModel& model, std::size_t c, std::size_t source) {
    std::vector<double> out(model.basis());
    model.impact.coefficient(c, source, out);
    return out;
}

double intensity(const HawkesModel& model, const TrainingSample& sample, std::size_t c) {
    return IntensityEvaluator(model).intensity(c, sample.target_time, history_of(sample), context_of(sample));
}

std::vector<double> expected_counts(const HawkesModel& model, const TrainingSample& sample) {
    std::vector<double> out(model.num_types());
    IntensityEvaluator(model).expected_counts(sample.prev_time, sample.target_time, history_of(sample),
                                              context_of(sample), out);
    return out;
}

std::vector<double> expected_counts_quadrature(const HawkesModel& model, const TrainingSample& sample,
                                               std::size_t nodes) {
    std::vector<double> out(model.num_types());
    IntensityEvaluator(model).expected_counts_quadrature(sample.prev_time, sample.target_time, history_of(sample),
                                                         context_of(sample), nodes, out);
    return out;
}

GradientSet model_param_grad(const HawkesModel& model, std::span<const TrainingSample> batch,
                             std::span<const SampleAdjoint> adjoints) {
    if (batch.size() != adjoints.size()) throw std::invalid_argument("one adjoint per sample required");
    IntensityEvaluator eval(model);
    auto acc = eval.make_accumulator();
    for (std::size_t i = 0; i < batch.size(); ++i) eval.backward(batch[i], adjoints[i], acc);
    return eval.finish(std::move(acc));
}

std::vector<double> infectivity_matrix(const HawkesModel& model) {
    const std::size_t C = model.num_types(), M = model.basis();
    const auto mass = model.kernels.total_mass();
    const auto table = model.impact.coefficient_table();
    std::vector<double> out(C * C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t s = 0; s < C; ++s) {
            for (std::size_t m = 0; m < M; ++m) out[c * C + s] += table[(c * C + s) * M + m] * mass[m];
        }
    }
    return out;
}

}  // namespace ppkit
