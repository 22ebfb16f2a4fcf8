#include "ppkit/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ppkit {

namespace {

constexpr double kMinBandwidth = 1e-6;
constexpr double kDissimilarityEps = 1e-8;

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

void check_pairable(const Database& db1, const Database& db2, const SimilarityConfig& cfg) {
    cfg.validate();
    if (db1.idx2type != db2.idx2type) {
        throw std::invalid_argument("databases have mismatched type vocabularies");
    }
    if (db2.sequences.empty()) throw std::invalid_argument("second database has no sequences");
    if (cfg.method == PairingMethod::Feature) {
        const auto d1 = db1.seq_feature_dim();
        const auto d2 = db2.seq_feature_dim();
        if ((!db1.sequences.empty() && !d1) || !d2 || (d1 && *d1 != *d2)) {
            throw std::invalid_argument("feature pairing requires sequence features on both databases");
        }
    }
}

// Log of the product of the temporal and feature Gaussian kernels.
std::vector<std::vector<double>> log_similarity(const Database& db1, const Database& db2,
                                                const SimilarityConfig& cfg) {
    const std::size_t n1 = db1.sequences.size(), n2 = db2.sequences.size();
    double h_t = cfg.time_bandwidth.value_or(0.0);
    double h_f = cfg.feature_bandwidth.value_or(0.0);
    if (!cfg.time_bandwidth || !cfg.feature_bandwidth) {
        std::vector<double> gaps, dists;
        for (const auto& a : db1.sequences) {
            for (const auto& b : db2.sequences) {
                gaps.push_back(std::abs(b.t_start - a.t_stop));
                dists.push_back(std::sqrt(squared_distance(*a.seq_feature, *b.seq_feature)));
            }
        }
        if (!cfg.time_bandwidth) h_t = std::max(median(gaps) / 2.0, kMinBandwidth);
        if (!cfg.feature_bandwidth) h_f = std::max(median(dists) / 2.0, kMinBandwidth);
    }
    std::vector<std::vector<double>> out(n1, std::vector<double>(n2));
    for (std::size_t i = 0; i < n1; ++i) {
        const auto& a = db1.sequences[i];
        for (std::size_t j = 0; j < n2; ++j) {
            const auto& b = db2.sequences[j];
            const double gap = b.t_start - a.t_stop;
            out[i][j] = -gap * gap / (2.0 * h_t * h_t) -
                        squared_distance(*a.seq_feature, *b.seq_feature) / (2.0 * h_f * h_f);
        }
    }
    return out;
}

std::vector<std::size_t> draw_partners(const std::vector<std::vector<double>>& probs,
                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> out;
    out.reserve(probs.size());
    for (const auto& row : probs) {
        std::discrete_distribution<std::size_t> pick(row.begin(), row.end());
        out.push_back(pick(rng));
    }
    return out;
}

Database copy_skeleton(const Database& db1) {
    Database out;
    out.num_types = db1.num_types;
    out.type2idx = db1.type2idx;
    out.idx2type = db1.idx2type;
    out.seq2idx = db1.seq2idx;
    out.idx2seq = db1.idx2seq;
    out.event_features = db1.event_features;
    return out;
}

}  // namespace

void SimilarityConfig::validate() const {
    if (time_bandwidth && !(*time_bandwidth > 0.0)) throw std::invalid_argument("time_bandwidth must be positive");
    if (feature_bandwidth && !(*feature_bandwidth > 0.0)) {
        throw std::invalid_argument("feature_bandwidth must be positive");
    }
}

std::vector<std::vector<double>> pairing_probabilities(const Database& db1, const Database& db2,
                                                       const SimilarityConfig& cfg,
                                                       bool favor_dissimilar) {
    check_pairable(db1, db2, cfg);
    const std::size_t n1 = db1.sequences.size(), n2 = db2.sequences.size();
    if (cfg.method == PairingMethod::Random) {
        return std::vector<std::vector<double>>(n1, std::vector<double>(n2, 1.0 / static_cast<double>(n2)));
    }
    auto logsim = log_similarity(db1, db2, cfg);
    for (auto& row : logsim) {
        std::vector<double> w(n2);
        if (!favor_dissimilar) {
            const double top = *std::max_element(row.begin(), row.end());
            for (std::size_t j = 0; j < n2; ++j) w[j] = std::exp(row[j] - top);
        } else {
            std::vector<double> sim(n2);
            for (std::size_t j = 0; j < n2; ++j) sim[j] = std::exp(row[j]);
            const double top = *std::max_element(sim.begin(), sim.end());
            for (std::size_t j = 0; j < n2; ++j) w[j] = top - sim[j] + kDissimilarityEps;
        }
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        for (std::size_t j = 0; j < n2; ++j) row[j] = w[j] / total;
    }
    return logsim;
}

Database stitching(const Database& db1, const Database& db2, const SimilarityConfig& cfg) {
    const auto partners = draw_partners(pairing_probabilities(db1, db2, cfg, false), cfg.rng_seed);
    Database out = copy_skeleton(db1);
    out.sequences.reserve(db1.sequences.size());
    for (std::size_t i = 0; i < db1.sequences.size(); ++i) {
        const auto& a = db1.sequences[i];
        const auto& b = db2.sequences[partners[i]];
        EventSequence s = a;
        s.t_stop = a.t_stop + (b.t_stop - b.t_start);
        const double shift = a.t_stop - b.t_start;
        for (std::size_t k = 0; k < b.size(); ++k) {
            s.times.push_back(std::clamp(b.times[k] + shift, a.t_stop, s.t_stop));
            s.events.push_back(b.events[k]);
        }
        out.sequences.push_back(std::move(s));
    }
    return out;
}

Database superposing(const Database& db1, const Database& db2, const SimilarityConfig& cfg) {
    const auto partners = draw_partners(pairing_probabilities(db1, db2, cfg, true), cfg.rng_seed);
    Database out = copy_skeleton(db1);
    out.sequences.reserve(db1.sequences.size());
    for (std::size_t i = 0; i < db1.sequences.size(); ++i) {
        const auto& a = db1.sequences[i];
        const auto& b = db2.sequences[partners[i]];
        EventSequence s;
        s.seq_feature = a.seq_feature;
        s.label = a.label;
        s.t_start = std::min(a.t_start, b.t_start);
        s.t_stop = std::max(a.t_stop, b.t_stop);
        std::size_t p = 0, q = 0;
        while (p < a.size() || q < b.size()) {
            if (q == b.size() || (p < a.size() && a.times[p] <= b.times[q])) {
                s.times.push_back(a.times[p]);
                s.events.push_back(a.events[p++]);
            } else {
                s.times.push_back(b.times[q]);
                s.events.push_back(b.events[q++]);
            }
        }
        out.sequences.push_back(std::move(s));
    }
    return out;
}

std::vector<CountMatrix> aggregating(const Database& db, double bin_width) {
    if (!(bin_width > 0.0)) throw std::invalid_argument("bin_width must be positive");
    std::vector<CountMatrix> out;
    out.reserve(db.sequences.size());
    for (const auto& seq : db.sequences) {
        CountMatrix m;
        m.types = db.num_types;
        m.bins = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil((seq.t_stop - seq.t_start) / bin_width)));
        m.counts.assign(m.bins * m.types, 0);
        for (std::size_t i = 0; i < seq.size(); ++i) {
            const double offset = (seq.times[i] - seq.t_start) / bin_width;
            auto b = static_cast<std::size_t>(std::max(0.0, std::floor(offset)));
            b = std::min(b, m.bins - 1);
            ++m.counts[b * m.types + seq.events[i]];
        }
        out.push_back(std::move(m));
    }
    return out;
}

TrainingSample make_sample(const EventSequence& seq, std::size_t seq_index, std::size_t i,
                           std::size_t memory_size, std::size_t num_types) {
    TrainingSample s;
    s.target_type = seq.events[i];
    s.target_time = seq.times[i];
    s.prev_time = i > 0 ? seq.times[i - 1] : seq.t_start;
    s.seq_index = seq_index;
    s.seq_feature = seq.seq_feature;
    s.history_types.assign(memory_size, num_types);
    s.history_times.assign(memory_size, seq.t_start);
    const std::size_t have = std::min(memory_size, i);
    for (std::size_t k = 0; k < have; ++k) {
        const std::size_t src = i - have + k;
        s.history_types[memory_size - have + k] = seq.events[src];
        s.history_times[memory_size - have + k] = seq.times[src];
    }
    return s;
}

EventSampler::EventSampler(const Database& db, std::size_t memory_size) : memory_size_(memory_size) {
    if (memory_size == 0) throw std::invalid_argument("memory size must be at least 1");
    samples_.reserve(db.num_events());
    for (std::size_t s = 0; s < db.sequences.size(); ++s) {
        const auto& seq = db.sequences[s];
        for (std::size_t i = 0; i < seq.size(); ++i) {
            samples_.push_back(make_sample(seq, s, i, memory_size, db.num_types));
        }
    }
}

std::vector<std::vector<std::size_t>> EventSampler::batch_indices(std::size_t batch_size, bool shuffle,
                                                                  std::uint64_t seed) const {
    if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
    std::vector<std::size_t> order(samples_.size());
    std::iota(order.begin(), order.end(), 0);
    if (shuffle) {
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
        const std::size_t end = std::min(order.size(), begin + batch_size);
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

std::vector<Batch> make_samples(const Database& db, std::size_t memory_size, std::size_t batch_size,
                                bool shuffle, std::uint64_t rng_seed) {
    EventSampler sampler(db, memory_size);
    std::vector<Batch> out;
    for (const auto& idx : sampler.batch_indices(batch_size, shuffle, rng_seed)) {
        Batch b;
        b.reserve(idx.size());
        for (auto i : idx) b.push_back(sampler[i]);
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace ppkit
