#include "ppkit/learning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ppkit {

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::MaxLogLike: return "mle";
        case LossKind::LeastSquare: return "lse";
        case LossKind::CrossEntropy: return "ce";
    }
    return "?";
}

LossKind parse_loss_kind(const std::string& name) {
    if (name == "mle") return LossKind::MaxLogLike;
    if (name == "lse") return LossKind::LeastSquare;
    if (name == "ce") return LossKind::CrossEntropy;
    throw std::invalid_argument("unknown loss '" + name + "' (expected mle, lse or ce)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer_kind(const std::string& name) {
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "sgd") return OptimizerKind::SGD;
    throw std::invalid_argument("unknown optimizer '" + name + "' (expected adam or sgd)");
}

double sample_loss(const IntensityEvaluator& eval, LossKind kind, const TrainingSample& s, SampleAdjoint* adjoint) {
    const std::size_t C = eval.num_types();
    std::vector<double> counts(C);
    const auto h = history_of(s);
    const auto ctx = context_of(s);
    eval.expected_counts(s.prev_time, s.target_time, h, ctx, counts);
    if (adjoint) {
        adjoint->intensity = 0.0;
        adjoint->counts.assign(C, 0.0);
    }
    switch (kind) {
        case LossKind::MaxLogLike: {
            const double lam = eval.intensity(s.target_type, s.target_time, h, ctx);
            if (!(lam > 0.0)) {
                std::ostringstream msg;
                msg << "non-positive intensity at observed event (sequence " << s.seq_index << ", time "
                    << s.target_time << ", type " << s.target_type << ", intensity " << lam << ")";
                throw std::domain_error(msg.str());
            }
            double total = 0.0;
            for (double v : counts) total += v;
            if (adjoint) {
                adjoint->intensity = -1.0 / lam;
                std::fill(adjoint->counts.begin(), adjoint->counts.end(), 1.0);
            }
            return -std::log(lam) + total;
        }
        case LossKind::LeastSquare: {
            double total = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                const double r = counts[c] - (c == s.target_type ? 1.0 : 0.0);
                total += r * r;
                if (adjoint) adjoint->counts[c] = 2.0 * r;
            }
            return total;
        }
        case LossKind::CrossEntropy: {
            const double top = *std::max_element(counts.begin(), counts.end());
            double z = 0.0;
            for (double v : counts) z += std::exp(v - top);
            const double lse = top + std::log(z);
            if (adjoint) {
                for (std::size_t c = 0; c < C; ++c) {
                    adjoint->counts[c] = std::exp(counts[c] - lse) - (c == s.target_type ? 1.0 : 0.0);
                }
            }
            return lse - counts[s.target_type];
        }
    }
    return 0.0;
}

double loss(const HawkesModel& model, LossKind kind, std::span<const TrainingSample> batch) {
    IntensityEvaluator eval(model);
    double total = 0.0;
    for (const auto& s : batch) total += sample_loss(eval, kind, s);
    return total;
}

double loss_mle(const HawkesModel& model, std::span<const TrainingSample> batch) {
    return loss(model, LossKind::MaxLogLike, batch);
}
double loss_lse(const HawkesModel& model, std::span<const TrainingSample> batch) {
    return loss(model, LossKind::LeastSquare, batch);
}
double loss_ce(const HawkesModel& model, std::span<const TrainingSample> batch) {
    return loss(model, LossKind::CrossEntropy, batch);
}

namespace {

// Contiguous shard boundaries; shard k is [bounds[k], bounds[k+1]).
std::vector<std::size_t> shard_bounds(std::size_t n, std::size_t threads) {
    const std::size_t k = std::max<std::size_t>(1, std::min(threads, n));
    std::vector<std::size_t> b(k + 1);
    for (std::size_t i = 0; i <= k; ++i) b[i] = n * i / k;
    return b;
}

template <typename Fn>
auto run_shards(std::size_t n, std::size_t threads, Fn&& fn) {
    const auto bounds = shard_bounds(n, threads);
    using R = decltype(fn(std::size_t{0}, std::size_t{0}));
    std::vector<R> out;
    if (bounds.size() == 2) {
        out.push_back(fn(bounds[0], bounds[1]));
        return out;
    }
    std::vector<std::future<R>> futures;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        futures.push_back(std::async(std::launch::async, [&fn, lo = bounds[k], hi = bounds[k + 1]] { return fn(lo, hi); }));
    }
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

}  // namespace

LossAndGrad loss_and_grad(const HawkesModel& model, LossKind kind, std::span<const TrainingSample> batch,
                          std::size_t threads) {
    IntensityEvaluator eval(model);
    struct Shard {
        double value;
        GradientAccumulator acc;
    };
    auto shards = run_shards(batch.size(), threads, [&](std::size_t lo, std::size_t hi) {
        Shard sh{0.0, eval.make_accumulator()};
        SampleAdjoint adj;
        for (std::size_t i = lo; i < hi; ++i) {
            sh.value += sample_loss(eval, kind, batch[i], &adj);
            eval.backward(batch[i], adj, sh.acc);
        }
        return sh;
    });
    LossAndGrad out;
    for (std::size_t k = 1; k < shards.size(); ++k) shards[0].acc.merge(shards[k].acc);
    for (const auto& sh : shards) out.value += sh.value;
    out.grad = eval.finish(std::move(shards[0].acc));
    return out;
}

void adam_step(std::span<Parameter* const> params, const GradientSet& grads, double lr, const AdamSettings& cfg,
               OptimizerState& state) {
    if (state.first_moment.size() != params.size()) {
        state.first_moment.clear();
        state.second_moment.clear();
        for (const auto* p : params) {
            state.first_moment.emplace_back(p->size(), 0.0);
            state.second_moment.emplace_back(p->size(), 0.0);
        }
        state.step = 0;
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p]->trainable) continue;
        auto& m = state.first_moment[p];
        auto& v = state.second_moment[p];
        if (m.size() != grads[p].size() || m.size() != params[p]->size()) {
            throw std::invalid_argument("optimizer state does not match parameter '" + params[p]->name + "'");
        }
        for (std::size_t k = 0; k < m.size(); ++k) {
            const double g = grads[p][k];
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
            params[p]->values[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.epsilon);
        }
    }
}

void sgd_step(std::span<Parameter* const> params, const GradientSet& grads, double lr) {
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p]->trainable) continue;
        for (std::size_t k = 0; k < params[p]->size(); ++k) params[p]->values[k] -= lr * grads[p][k];
    }
}

void FitConfig::validate() const {
    if (epochs == 0) throw std::invalid_argument("epochs must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be finite and nonnegative");
    }
    if (!(lr_decay_gamma > 0.0 && lr_decay_gamma <= 1.0)) throw std::invalid_argument("lr_decay_gamma must lie in (0, 1]");
    if (!(l1_weight >= 0.0)) throw std::invalid_argument("l1_weight must be nonnegative");
    if (!(l2_weight >= 0.0)) throw std::invalid_argument("l2_weight must be nonnegative");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw std::invalid_argument("validation_fraction must lie in [0, 1)");
    }
    if (memory_size && *memory_size == 0) throw std::invalid_argument("memory_size must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.epsilon > 0.0)) {
        throw std::invalid_argument("invalid Adam settings");
    }
    if (threads == 0) throw std::invalid_argument("threads must be positive");
}

double regularization(const HawkesModel& model, const FitConfig& cfg) {
    double total = 0.0;
    for (const auto* p : model.parameters()) {
        if (!p->trainable) continue;
        const bool l1 = cfg.l1_weight > 0.0 && cfg.l1_roles.contains(p->role);
        for (double v : p->values) {
            if (l1) total += cfg.l1_weight * std::abs(v);
            total += cfg.l2_weight * v * v;
        }
    }
    return total;
}

void add_regularization_grad(const HawkesModel& model, const FitConfig& cfg, GradientSet& grads) {
    const auto params = model.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p]->trainable) continue;
        const bool l1 = cfg.l1_weight > 0.0 && cfg.l1_roles.contains(params[p]->role);
        for (std::size_t k = 0; k < params[p]->size(); ++k) {
            const double v = params[p]->values[k];
            if (l1) grads[p][k] += cfg.l1_weight * static_cast<double>((v > 0.0) - (v < 0.0));
            grads[p][k] += 2.0 * cfg.l2_weight * v;
        }
    }
}

void project_nonnegative(HawkesModel& model, const std::set<std::string>& groups) {
    for (const auto& name : groups) {
        auto* p = model.find_parameter(name);
        if (!p) throw std::invalid_argument("unknown parameter group '" + name + "'");
        for (double& v : p->values) v = std::max(v, 0.0);
    }
}

std::string EpochReport::to_json() const {
    nlohmann::json j;
    j["epoch"] = epoch;
    j["train_loss"] = train_loss;
    j["train_eval_loss"] = train_eval_loss;
    j["val_loss"] = val_loss ? nlohmann::json(*val_loss) : nlohmann::json(nullptr);
    j["lr"] = lr;
    j["seconds"] = seconds;
    return j.dump();
}

std::string FitReport::to_json_lines() const {
    std::string out;
    for (const auto& e : epochs) out += e.to_json() + "\n";
    return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_sequences(std::size_t num_sequences,
                                                                              double validation_fraction,
                                                                              std::uint64_t seed) {
    std::vector<std::size_t> order(num_sequences);
    std::iota(order.begin(), order.end(), 0);
    std::size_t n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(num_sequences)));
    if (validation_fraction > 0.0 && n_val == 0 && num_sequences > 1) n_val = 1;
    if (n_val >= num_sequences) n_val = num_sequences - 1;
    if (n_val == 0) return {order, {}};
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    return {train, val};
}

double mean_loss(const HawkesModel& model, LossKind kind, std::span<const TrainingSample> samples,
                 std::size_t threads) {
    if (samples.empty()) throw std::invalid_argument("no samples");
    IntensityEvaluator eval(model);
    const auto parts = run_shards(samples.size(), threads, [&](std::size_t lo, std::size_t hi) {
        double total = 0.0;
        for (std::size_t i = lo; i < hi; ++i) total += sample_loss(eval, kind, samples[i]);
        return total;
    });
    double total = 0.0;
    for (double v : parts) total += v;
    return total / static_cast<double>(samples.size());
}

double validation(const HawkesModel& model, const Database& db, LossKind kind, std::size_t threads) {
    EventSampler sampler(db, model.memory_size);
    return mean_loss(model, kind, sampler.samples(), threads);
}

namespace {

bool all_finite(const GradientSet& g) {
    for (const auto& row : g) {
        for (double v : row) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

}  // namespace

FitReport fit(HawkesModel& model, const Database& db, const FitConfig& cfg, LossKind kind,
              const std::function<void(const EpochReport&)>& on_epoch) {
    cfg.validate();
    if (const auto bad = validate_database(db); !bad.empty()) {
        throw std::invalid_argument("invalid database: " + to_string(bad.front()));
    }
    if (db.num_types != model.num_types()) {
        throw std::invalid_argument("model has " + std::to_string(model.num_types()) + " types but data has " +
                                    std::to_string(db.num_types));
    }
    if (cfg.memory_size) model.memory_size = *cfg.memory_size;
    if (cfg.nonnegative) {
        for (const auto& name : *cfg.nonnegative) {
            if (!model.find_parameter(name)) throw std::invalid_argument("unknown parameter group '" + name + "'");
        }
    }

    EventSampler sampler(db, model.memory_size);
    const auto [train_seqs, val_seqs] = split_sequences(db.sequences.size(), cfg.validation_fraction, cfg.rng_seed);
    std::vector<bool> is_val(db.sequences.size(), false);
    for (auto s : val_seqs) is_val[s] = true;
    std::vector<TrainingSample> train, val;
    for (const auto& s : sampler.samples()) (is_val[s.seq_index] ? val : train).push_back(s);
    if (train.empty()) throw std::invalid_argument("no samples");

    FitReport report;
    report.train_samples = train.size();
    report.val_samples = val.size();

    const auto params = model.parameters();
    OptimizerState state;
    std::mt19937_64 rng(cfg.rng_seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<TrainingSample> batch;
    double lr = cfg.learning_rate;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
        double epoch_total = 0.0;
        std::size_t step = 0;
        for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size, ++step) {
            const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
            batch.clear();
            for (std::size_t i = lo; i < hi; ++i) batch.push_back(train[order[i]]);
            auto [value, grad] = loss_and_grad(model, kind, batch, cfg.threads);
            const double n = static_cast<double>(batch.size());
            const double objective = value / n + regularization(model, cfg);
            for (auto& row : grad) {
                for (double& g : row) g /= n;
            }
            add_regularization_grad(model, cfg, grad);
            if (!std::isfinite(objective) || !all_finite(grad)) {
                std::ostringstream msg;
                msg << "training diverged at epoch " << epoch << " step " << step << ": objective " << objective;
                throw std::runtime_error(msg.str());
            }
            epoch_total += value;
            if (cfg.optimizer == OptimizerKind::Adam) adam_step(params, grad, lr, cfg.adam, state);
            else sgd_step(params, grad, lr);
            if (cfg.nonnegative) project_nonnegative(model, *cfg.nonnegative);
            model.project();
        }

        EpochReport e;
        e.epoch = epoch;
        e.train_loss = epoch_total / static_cast<double>(train.size());
        e.train_eval_loss = mean_loss(model, kind, train, cfg.threads);
        if (!std::isfinite(e.train_eval_loss)) {
            throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": non-finite loss");
        }
        if (!val.empty()) e.val_loss = mean_loss(model, kind, val, cfg.threads);
        e.lr = lr;
        e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.epochs.push_back(e);
        if (on_epoch) on_epoch(e);
        lr *= cfg.lr_decay_gamma;
    }
    return report;
}

double sequence_log_likelihood(const HawkesModel& model, const EventSequence& seq, std::size_t seq_index) {
    IntensityEvaluator eval(model);
    const std::size_t C = model.num_types();
    std::vector<double> counts(C);
    double ll = 0.0;
    for (std::size_t i = 0; i < seq.events.size(); ++i) {
        const auto s = make_sample(seq, seq_index, i, model.memory_size, C);
        const auto h = history_of(s);
        const auto ctx = context_of(s);
        const double lam = eval.intensity(s.target_type, s.target_time, h, ctx);
        if (!(lam > 0.0)) throw std::domain_error("non-positive intensity at observed event");
        eval.expected_counts(s.prev_time, s.target_time, h, ctx, counts);
        ll += std::log(lam) - std::accumulate(counts.begin(), counts.end(), 0.0);
    }
    // Tail interval via a placeholder event at t_stop.
    EventSequence tail = seq;
    tail.times.push_back(seq.t_stop);
    tail.events.push_back(0);
    const auto s = make_sample(tail, seq_index, seq.events.size(), model.memory_size, C);
    eval.expected_counts(s.prev_time, s.target_time, history_of(s), context_of(s), counts);
    return ll - std::accumulate(counts.begin(), counts.end(), 0.0);
}

}  // namespace ppkit
