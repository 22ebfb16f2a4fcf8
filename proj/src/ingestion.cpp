#include "ppkit/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "ppkit/csv.hpp"

namespace ppkit {

void ColumnMapping::validate() const {
    if (seq_id.empty() || time.empty() || event.empty()) {
        throw std::invalid_argument("column mapping names must be nonempty");
    }
    if (seq_id == time || seq_id == event || time == event) {
        throw std::invalid_argument("column mapping names must be distinct");
    }
}

void FeatureDomainSpec::validate() const {
    if (columns.empty()) throw std::invalid_argument("feature spec needs at least one column");
}

FeatureKind parse_feature_kind(const std::string& s) {
    if (s == "categorical") return FeatureKind::Categorical;
    if (s == "numerical") return FeatureKind::Numerical;
    throw std::invalid_argument("unknown feature kind '" + s + "' (categorical|numerical)");
}

Normalization parse_normalization(const std::string& s) {
    if (s == "none" || s == "0") return Normalization::None;
    if (s == "minmax") return Normalization::MinMax;
    if (s == "zscore") return Normalization::ZScore;
    throw std::invalid_argument("unknown normalization '" + s + "' (none|minmax|zscore)");
}

namespace {

std::string row_error(const csv::Table& table, std::size_t row, const std::string& what) {
    return "row " + std::to_string(table.row_records[row]) + ": " + what;
}

const std::string& cell(const csv::Table& table, std::size_t row, std::size_t col) {
    const auto& r = table.rows[row];
    if (col >= r.size()) throw std::invalid_argument(row_error(table, row, "too few fields"));
    return r[col];
}

double parse_time(const csv::Table& table, std::size_t row, std::size_t col) {
    const auto& text = cell(table, row, col);
    auto v = csv::parse_double(text);
    if (!v || !std::isfinite(*v)) {
        throw std::invalid_argument(row_error(table, row, "unparseable time '" + text + "'"));
    }
    return *v;
}

void normalize_columns(std::vector<std::vector<double>>& vectors, Normalization mode) {
    if (mode == Normalization::None || vectors.empty()) return;
    const std::size_t width = vectors.front().size();
    const double n = static_cast<double>(vectors.size());
    for (std::size_t d = 0; d < width; ++d) {
        if (mode == Normalization::MinMax) {
            double lo = vectors[0][d], hi = vectors[0][d];
            for (const auto& v : vectors) {
                lo = std::min(lo, v[d]);
                hi = std::max(hi, v[d]);
            }
            const double range = hi - lo;
            for (auto& v : vectors) v[d] = range > 0.0 ? (v[d] - lo) / range : 0.0;
        } else {
            double mean = 0.0;
            for (const auto& v : vectors) mean += v[d];
            mean /= n;
            double var = 0.0;
            for (const auto& v : vectors) var += (v[d] - mean) * (v[d] - mean);
            const double sd = std::sqrt(var / n);
            for (auto& v : vectors) v[d] = sd > 0.0 ? (v[d] - mean) / sd : 0.0;
        }
    }
}

// Encodes the spec columns of `table` per entity (sequence or type). Rows are
// keyed by `key_col`; `resolve` maps a key to the entity index or throws.
std::vector<std::vector<double>> encode_features(
    const csv::Table& table, std::size_t key_col, std::size_t num_entities,
    const std::function<std::size_t(const std::string&, std::size_t)>& resolve,
    const FeatureDomainSpec& spec) {
    std::vector<std::size_t> entity_of_row(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        entity_of_row[r] = resolve(cell(table, r, key_col), r);
    }

    std::vector<std::vector<double>> out(num_entities);
    for (const auto& [name, kind] : spec.columns) {
        const std::size_t col = table.column(name);
        if (kind == FeatureKind::Categorical) {
            std::vector<std::string> values;
            std::unordered_map<std::string, std::size_t> value_index;
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                const auto& v = cell(table, r, col);
                if (v.empty()) continue;
                if (value_index.emplace(v, values.size()).second) values.push_back(v);
            }
            std::vector<std::vector<double>> hot(num_entities, std::vector<double>(values.size(), 0.0));
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                const auto& v = cell(table, r, col);
                if (v.empty()) continue;
                hot[entity_of_row[r]][value_index.at(v)] = 1.0;
            }
            for (std::size_t e = 0; e < num_entities; ++e) {
                out[e].insert(out[e].end(), hot[e].begin(), hot[e].end());
            }
        } else {
            std::vector<double> sum(num_entities, 0.0);
            std::vector<std::size_t> count(num_entities, 0);
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                const auto& text = cell(table, r, col);
                auto v = csv::parse_double(text);
                if (!v) {
                    throw std::invalid_argument(row_error(
                        table, r, "non-numeric value '" + text + "' in numerical column '" + name + "'"));
                }
                sum[entity_of_row[r]] += *v;
                ++count[entity_of_row[r]];
            }
            for (std::size_t e = 0; e < num_entities; ++e) {
                out[e].push_back(count[e] ? sum[e] / static_cast<double>(count[e]) : 0.0);
            }
        }
    }
    normalize_columns(out, spec.normalize);
    return out;
}

}  // namespace

Database load_sequences_csv(const std::string& path, const ColumnMapping& mapping) {
    mapping.validate();
    const auto table = csv::read_file(path);
    const std::size_t id_col = table.column(mapping.seq_id);
    const std::size_t time_col = table.column(mapping.time);
    const std::size_t event_col = table.column(mapping.event);
    std::optional<std::size_t> start_col, stop_col;
    if (!mapping.t_start.empty()) start_col = table.column(mapping.t_start);
    if (!mapping.t_stop.empty()) stop_col = table.column(mapping.t_stop);
    if (table.rows.empty()) throw std::invalid_argument("no events");

    struct Row {
        double time;
        std::size_t type;
    };
    struct Pending {
        std::string name;
        std::vector<Row> rows;
        std::optional<double> t_start, t_stop;
    };
    Database db;
    std::vector<Pending> pending;
    std::unordered_map<std::string, std::size_t> seq_of;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& id = cell(table, r, id_col);
        const double t = parse_time(table, r, time_col);
        const std::size_t type = db.intern_type(cell(table, r, event_col));
        auto [it, inserted] = seq_of.emplace(id, pending.size());
        if (inserted) pending.push_back({id, {}, {}, {}});
        auto& p = pending[it->second];
        p.rows.push_back({t, type});
        if (start_col) {
            const double v = parse_time(table, r, *start_col);
            p.t_start = p.t_start ? std::min(*p.t_start, v) : v;
        }
        if (stop_col) {
            const double v = parse_time(table, r, *stop_col);
            p.t_stop = p.t_stop ? std::max(*p.t_stop, v) : v;
        }
    }

    for (auto& p : pending) {
        std::stable_sort(p.rows.begin(), p.rows.end(),
                         [](const Row& a, const Row& b) { return a.time < b.time; });
        EventSequence seq;
        for (const auto& row : p.rows) {
            seq.times.push_back(row.time);
            seq.events.push_back(row.type);
        }
        seq.t_start = p.t_start.value_or(seq.times.front());
        seq.t_stop = p.t_stop.value_or(seq.times.back());
        if (seq.t_start > seq.times.front() || seq.t_stop < seq.times.back()) {
            throw std::invalid_argument("sequence '" + p.name + "': window columns do not cover its events");
        }
        db.add_sequence(p.name, std::move(seq));
    }
    return db;
}

Database load_seq_features_csv(const std::string& path, const std::string& seq_domain,
                               const FeatureDomainSpec& spec, Database db) {
    spec.validate();
    if (db.seq2idx.empty()) throw std::invalid_argument("database has no sequences; load sequences first");
    const auto table = csv::read_file(path);
    const std::size_t key_col = table.column(seq_domain);
    auto resolve = [&](const std::string& key, std::size_t row) {
        auto it = db.seq2idx.find(key);
        if (it == db.seq2idx.end()) {
            throw std::invalid_argument(row_error(table, row, "unknown sequence '" + key + "'"));
        }
        return it->second;
    };
    auto features = encode_features(table, key_col, db.sequences.size(), resolve, spec);
    for (std::size_t s = 0; s < db.sequences.size(); ++s) {
        db.sequences[s].seq_feature = std::move(features[s]);
    }
    return db;
}

Database load_event_features_csv(const std::string& path, const std::string& event_domain,
                                 const FeatureDomainSpec& spec, Database db) {
    spec.validate();
    if (db.type2idx.empty()) throw std::invalid_argument("database has no event types; load sequences first");
    const auto table = csv::read_file(path);
    const std::size_t key_col = table.column(event_domain);
    auto resolve = [&](const std::string& key, std::size_t row) {
        auto it = db.type2idx.find(key);
        if (it == db.type2idx.end()) {
            throw std::invalid_argument(row_error(table, row, "unknown event type '" + key + "'"));
        }
        return it->second;
    };
    auto features = encode_features(table, key_col, db.num_types, resolve, spec);
    const std::size_t width = features.empty() ? 0 : features.front().size();
    FeatureMatrix m(width, db.num_types);
    for (std::size_t c = 0; c < db.num_types; ++c) {
        for (std::size_t r = 0; r < width; ++r) m.at(r, c) = features[c][r];
    }
    db.event_features = std::move(m);
    return db;
}

}  // namespace ppkit
