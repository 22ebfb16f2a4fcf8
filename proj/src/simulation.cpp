#include "ppkit/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <sstream>

#include "ppkit/intensity.hpp"
#include "ppkit/preprocess.hpp"

namespace ppkit {

void SimConfig::validate() const {
    if (!(t_begin < t_end)) throw std::invalid_argument("simulation horizon must satisfy t_begin < t_end");
    if (max_events == 0) throw std::invalid_argument("max_events must be at least 1");
    if (!(bound_refresh_width > 0.0)) throw std::invalid_argument("bound_refresh_width must be positive");
}

EventSequence simulate(const HawkesModel& model, const SimConfig& cfg, SimStats* stats) {
    cfg.validate();
    const std::size_t C = model.num_types();
    const std::size_t M = model.memory_size;
    IntensityEvaluator eval(model);

    EventSequence out;
    out.t_start = cfg.t_begin;
    out.t_stop = cfg.t_end;

    std::vector<std::size_t> types;
    std::vector<double> times;
    if (cfg.seed_sequence) {
        const auto& seed = *cfg.seed_sequence;
        out.seq_feature = seed.seq_feature;
        for (std::size_t i = 0; i < seed.size(); ++i) {
            if (seed.times[i] > cfg.t_begin) break;
            types.push_back(seed.events[i]);
            times.push_back(seed.times[i]);
        }
    }
    const std::vector<double> zero_feature(model.exogenous.seq_feature_dim(), 0.0);
    SequenceContext ctx;
    ctx.seq_feature = out.seq_feature ? std::span<const double>(*out.seq_feature) : std::span<const double>(zero_feature);
    ctx.seq_index = cfg.seq_index;

    auto window = [&] {
        const std::size_t n = types.size();
        const std::size_t k = std::min(n, M);
        return HistoryView{std::span<const std::size_t>(types).subspan(n - k),
                           std::span<const double>(times).subspan(n - k)};
    };

    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> bound(C), lam(C);
    SimStats local;
    double t = cfg.t_begin;
    while (t < cfg.t_end && out.size() < cfg.max_events) {
        const double w_end = std::min(t + cfg.bound_refresh_width, cfg.t_end);
        const auto h = window();
        eval.intensity_upper_bound(t, w_end, h, ctx, bound);
        double envelope = 0.0;
        for (double b : bound) envelope += b;
        if (!std::isfinite(envelope)) throw EnvelopeError("thinning envelope is not finite");
        if (envelope <= 0.0) {
            t = w_end;
            continue;
        }
        const double candidate = t + std::exponential_distribution<double>(envelope)(rng);
        if (candidate > w_end) {
            t = w_end;
            continue;
        }
        if (candidate <= t) continue;
        t = candidate;
        ++local.candidates;
        eval.intensities(t, h, ctx, lam);
        double total = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            if (lam[c] < 0.0) {
                std::ostringstream msg;
                msg << "negative intensity " << lam[c] << " for type " << c << " at time " << t;
                throw std::domain_error(msg.str());
            }
            total += lam[c];
        }
        const double ratio = total / envelope;
        local.max_ratio = std::max(local.max_ratio, ratio);
        if (ratio > 1.0 + 1e-9) {
            std::ostringstream msg;
            msg << "thinning envelope violated at time " << t << ": intensity " << total << " exceeds bound "
                << envelope;
            throw EnvelopeError(msg.str());
        }
        if (unit(rng) * envelope >= total) continue;
        const std::size_t c = std::discrete_distribution<std::size_t>(lam.begin(), lam.end())(rng);
        ++local.accepted;
        out.times.push_back(t);
        out.events.push_back(c);
        types.push_back(c);
        times.push_back(t);
    }
    if (stats) *stats = local;
    return out;
}

std::uint64_t replicate_seed(std::uint64_t base, std::size_t seq, std::size_t rep) {
    std::seed_seq seq_seed{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                           static_cast<std::uint32_t>(seq), static_cast<std::uint32_t>(rep)};
    std::uint32_t words[2];
    seq_seed.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

Prediction predict(const HawkesModel& model, const Database& db, double t0, double t1, const PredictConfig& cfg) {
    if (!(t0 < t1)) throw std::invalid_argument("prediction horizon must satisfy t0 < t1");
    if (cfg.replicates == 0) throw std::invalid_argument("replicates must be at least 1");
    if (db.num_types != model.num_types()) {
        throw std::invalid_argument("model has " + std::to_string(model.num_types()) + " types but data has " +
                                    std::to_string(db.num_types));
    }
    for (std::size_t s = 0; s < db.sequences.size(); ++s) {
        if (t0 < db.sequences[s].t_stop) {
            const std::string name = s < db.idx2seq.size() ? db.idx2seq[s] : std::to_string(s);
            std::ostringstream msg;
            msg << "horizon start " << t0 << " precedes t_stop " << db.sequences[s].t_stop << " of sequence '" << name
                << "'";
            throw PredictPreconditionError(msg.str());
        }
    }
    const std::size_t C = model.num_types();
    const std::size_t S = db.sequences.size();
    Prediction out;
    out.mean.assign(S, std::vector<double>(C, 0.0));
    out.std_error.assign(S, std::vector<double>(C, 0.0));

    auto run = [&](std::size_t s) {
        const auto& seq = db.sequences[s];
        std::vector<double> sum(C, 0.0), sum_sq(C, 0.0), count(C);
        for (std::size_t r = 0; r < cfg.replicates; ++r) {
            SimConfig sc;
            sc.t_begin = seq.t_stop;
            sc.t_end = t1;
            sc.seed_sequence = seq;
            sc.seq_index = s;
            sc.max_events = cfg.max_events;
            sc.rng_seed = replicate_seed(cfg.rng_seed, s, r);
            sc.bound_refresh_width = cfg.bound_refresh_width;
            const auto sim = simulate(model, sc);
            std::fill(count.begin(), count.end(), 0.0);
            for (std::size_t i = 0; i < sim.size(); ++i) {
                if (sim.times[i] > t0) count[sim.events[i]] += 1.0;
            }
            for (std::size_t c = 0; c < C; ++c) {
                sum[c] += count[c];
                sum_sq[c] += count[c] * count[c];
            }
        }
        const double R = static_cast<double>(cfg.replicates);
        for (std::size_t c = 0; c < C; ++c) {
            const double mean = sum[c] / R;
            out.mean[s][c] = mean;
            if (cfg.replicates > 1) {
                const double var = std::max(0.0, (sum_sq[c] - R * mean * mean) / (R - 1.0));
                out.std_error[s][c] = std::sqrt(var / R);
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, S));
    if (workers == 1) {
        for (std::size_t s = 0; s < S; ++s) run(s);
        return out;
    }
    std::vector<std::future<void>> futures;
    for (std::size_t w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t s = w; s < S; s += workers) run(s);
        }));
    }
    for (auto& f : futures) f.get();
    return out;
}

std::vector<double> time_rescaling_residuals(const HawkesModel& model, const EventSequence& seq,
                                             std::optional<std::size_t> seq_index) {
    IntensityEvaluator eval(model);
    const std::size_t C = model.num_types();
    std::vector<double> out, counts(C);
    out.reserve(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const auto s = make_sample(seq, seq_index.value_or(static_cast<std::size_t>(-1)), i, model.memory_size, C);
        SequenceContext ctx;
        if (seq.seq_feature) ctx.seq_feature = *seq.seq_feature;
        ctx.seq_index = seq_index;
        eval.expected_counts(s.prev_time, s.target_time, history_of(s), ctx, counts);
        double total = 0.0;
        for (double v : counts) total += v;
        out.push_back(total);
    }
    return out;
}

}  // namespace ppkit
