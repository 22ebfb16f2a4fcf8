#include "ppkit/core_data.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace ppkit {

std::size_t Database::num_events() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.size();
    return n;
}

std::size_t Database::intern_type(const std::string& name) {
    auto it = type2idx.find(name);
    if (it != type2idx.end()) return it->second;
    const std::size_t idx = idx2type.size();
    type2idx.emplace(name, idx);
    idx2type.push_back(name);
    num_types = idx2type.size();
    return idx;
}

std::size_t Database::add_sequence(const std::string& name, EventSequence seq) {
    if (seq2idx.count(name) != 0) {
        throw std::invalid_argument("duplicate sequence name '" + name + "'");
    }
    const std::size_t idx = sequences.size();
    seq2idx.emplace(name, idx);
    idx2seq.push_back(name);
    sequences.push_back(std::move(seq));
    return idx;
}

std::optional<std::size_t> Database::seq_feature_dim() const {
    if (sequences.empty()) return std::nullopt;
    std::optional<std::size_t> dim;
    for (const auto& s : sequences) {
        if (!s.seq_feature) return std::nullopt;
        if (dim && *dim != s.seq_feature->size()) return std::nullopt;
        dim = s.seq_feature->size();
    }
    return dim;
}

std::string to_string(const Violation& v) {
    std::ostringstream os;
    if (v.seq_index) os << "sequence " << *v.seq_index << ": ";
    os << v.field << ": " << v.message;
    return os.str();
}

namespace {

template <typename Map>
void check_bijection(const Map& forward, const std::vector<std::string>& inverse,
                     const std::string& field, std::vector<Violation>& out) {
    if (forward.size() != inverse.size()) {
        out.push_back({std::nullopt, field, "map sizes differ"});
        return;
    }
    for (const auto& [name, idx] : forward) {
        if (idx >= inverse.size() || inverse[idx] != name) {
            out.push_back({std::nullopt, field, "maps are not mutual inverses at '" + name + "'"});
            return;
        }
    }
}

}  // namespace

std::vector<Violation> validate_database(const Database& db) {
    std::vector<Violation> out;
    check_bijection(db.type2idx, db.idx2type, "type2idx", out);
    check_bijection(db.seq2idx, db.idx2seq, "seq2idx", out);
    if (db.type2idx.size() != db.num_types) {
        out.push_back({std::nullopt, "num_types", "type map size does not equal num_types"});
    }
    if (db.seq2idx.size() != db.sequences.size()) {
        out.push_back({std::nullopt, "seq2idx", "sequence map size does not equal sequence count"});
    }
    if (db.event_features && db.event_features->cols != db.num_types) {
        out.push_back({std::nullopt, "event_features", "column count does not equal num_types"});
    }
    for (std::size_t s = 0; s < db.sequences.size(); ++s) {
        const auto& seq = db.sequences[s];
        if (seq.times.size() != seq.events.size()) {
            out.push_back({s, "times/events", "length mismatch"});
            continue;
        }
        if (seq.t_start > seq.t_stop) {
            out.push_back({s, "t_start", "t_start exceeds t_stop"});
        }
        for (std::size_t i = 1; i < seq.times.size(); ++i) {
            if (seq.times[i] < seq.times[i - 1]) {
                out.push_back({s, "times", "non-monotone times at event " + std::to_string(i)});
                break;
            }
        }
        for (std::size_t i = 0; i < seq.times.size(); ++i) {
            if (seq.times[i] < seq.t_start || seq.times[i] > seq.t_stop) {
                out.push_back({s, "times", "event " + std::to_string(i) + " outside [t_start, t_stop]"});
                break;
            }
        }
        for (std::size_t i = 0; i < seq.events.size(); ++i) {
            if (seq.events[i] >= db.num_types) {
                out.push_back({s, "events", "out-of-range type " + std::to_string(seq.events[i]) +
                                                " at event " + std::to_string(i)});
                break;
            }
        }
    }
    return out;
}

Database relabel_types(const Database& db, const std::set<std::size_t>& keep) {
    if (keep.empty()) throw std::invalid_argument("no types retained");
    for (auto c : keep) {
        if (c >= db.num_types) {
            throw std::invalid_argument("type index " + std::to_string(c) + " out of range");
        }
    }
    constexpr std::size_t kDropped = static_cast<std::size_t>(-1);
    std::vector<std::size_t> remap(db.num_types, kDropped);
    Database out;
    for (auto c : keep) {
        remap[c] = out.idx2type.size();
        out.intern_type(db.idx2type[c]);
    }
    out.num_types = keep.size();
    out.seq2idx = db.seq2idx;
    out.idx2seq = db.idx2seq;
    out.sequences.reserve(db.sequences.size());
    for (const auto& seq : db.sequences) {
        EventSequence s = seq;
        s.times.clear();
        s.events.clear();
        for (std::size_t i = 0; i < seq.size(); ++i) {
            const auto mapped = remap[seq.events[i]];
            if (mapped == kDropped) continue;
            s.times.push_back(seq.times[i]);
            s.events.push_back(mapped);
        }
        out.sequences.push_back(std::move(s));
    }
    if (db.event_features) {
        FeatureMatrix f(db.event_features->rows, keep.size());
        for (auto c : keep) {
            for (std::size_t r = 0; r < f.rows; ++r) f.at(r, remap[c]) = db.event_features->at(r, c);
        }
        out.event_features = std::move(f);
    }
    return out;
}

}  // namespace ppkit
