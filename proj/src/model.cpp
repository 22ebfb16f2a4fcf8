#include "ppkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ppkit {

ModelDims ModelDims::from_database(const Database& db) {
    ModelDims dims;
    dims.num_types = db.num_types;
    dims.num_sequences = db.sequences.size();
    dims.seq_feature_dim = db.seq_feature_dim().value_or(0);
    dims.event_features = db.event_features;
    return dims;
}

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

std::size_t add(std::vector<Parameter>& params, Parameter p) {
    params.push_back(std::move(p));
    return params.size() - 1;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void fill_uniform(Parameter& p, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : p.values) v = dist(rng);
}

void fill_normal(Parameter& p, std::mt19937_64& rng, double sd) {
    std::normal_distribution<double> dist(0.0, sd);
    for (auto& v : p.values) v = dist(rng);
}

// Embedding tables carry one extra, frozen all-zero row for the pad type.
void zero_row(Parameter& p, std::size_t row, std::size_t width) {
    for (std::size_t k = 0; k < width; ++k) p[row * width + k] = 0.0;
}

constexpr double kEmbeddingSd = 0.1;

}  // namespace

// ---------------------------------------------------------------- exogenous

std::string to_string(ExogenousKind kind) {
    switch (kind) {
        case ExogenousKind::Constant: return "constant";
        case ExogenousKind::Naive: return "naive";
        case ExogenousKind::Linear: return "linear";
        case ExogenousKind::Neural: return "neural";
    }
    return "unknown";
}

ExogenousKind parse_exogenous_kind(const std::string& name) {
    for (auto k : {ExogenousKind::Constant, ExogenousKind::Naive, ExogenousKind::Linear, ExogenousKind::Neural}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown exogenous model '" + name + "' (constant|naive|linear|neural)");
}

ExogenousModel::ExogenousModel(ExogenousKind kind, Activation inner, const ModelDims& dims)
    : kind_(kind),
      inner_(inner),
      num_types_(dims.num_types),
      seq_dim_(dims.seq_feature_dim),
      num_sequences_(dims.num_sequences),
      embedding_dim_(dims.embedding_dim),
      hidden_dim_(dims.hidden_dim),
      event_features_(dims.event_features) {
    inner_.validate();
    if (num_types_ == 0) throw std::invalid_argument("model needs at least one event type");
    if (event_features_ && event_features_->cols != num_types_) {
        throw std::invalid_argument("event feature matrix does not have one column per type");
    }
    const std::size_t c = num_types_, d = embedding_dim_;
    const std::size_t seq_width = seq_dim_ > 0 ? seq_dim_ : d;
    switch (kind_) {
        case ExogenousKind::Constant:
        case ExogenousKind::Naive:
            mu_ = add(params_, Parameter("exo.mu", {c}, ParamRole::Exogenous));
            break;
        case ExogenousKind::Linear:
            weights_ = add(params_, Parameter("exo.weights", {c, seq_width}, ParamRole::Exogenous));
            if (seq_dim_ == 0) {
                seq_embedding_ = add(params_, Parameter("exo.seq_embedding", {num_sequences_, d}, ParamRole::Embedding));
            }
            break;
        case ExogenousKind::Neural: {
            std::size_t type_width = d;
            if (event_features_) {
                type_width = event_features_->rows;
            } else {
                type_embedding_ = add(params_, Parameter("exo.type_embedding", {c + 1, d}, ParamRole::Embedding));
            }
            if (seq_dim_ == 0) {
                seq_embedding_ = add(params_, Parameter("exo.seq_embedding", {num_sequences_, d}, ParamRole::Embedding));
            }
            const std::size_t in = type_width + seq_width;
            w1_ = add(params_, Parameter("exo.nn.w1", {hidden_dim_, in}, ParamRole::Exogenous));
            b1_ = add(params_, Parameter("exo.nn.b1", {hidden_dim_}, ParamRole::Exogenous));
            w2_ = add(params_, Parameter("exo.nn.w2", {hidden_dim_}, ParamRole::Exogenous));
            b2_ = add(params_, Parameter("exo.nn.b2", {1}, ParamRole::Exogenous));
            break;
        }
    }
}

const Parameter* ExogenousModel::base_rates() const { return mu_ == kNone ? nullptr : &params_[mu_]; }

std::vector<double> ExogenousModel::sequence_input(const SequenceContext& ctx) const {
    if (seq_dim_ > 0) {
        if (ctx.seq_feature.size() != seq_dim_) {
            throw std::invalid_argument("sequence feature has width " + std::to_string(ctx.seq_feature.size()) +
                                        ", exogenous model expects " + std::to_string(seq_dim_));
        }
        return {ctx.seq_feature.begin(), ctx.seq_feature.end()};
    }
    std::vector<double> out(embedding_dim_, 0.0);
    if (ctx.seq_index && *ctx.seq_index < num_sequences_) {
        const auto& e = params_[seq_embedding_];
        for (std::size_t k = 0; k < embedding_dim_; ++k) out[k] = e[*ctx.seq_index * embedding_dim_ + k];
    }
    return out;
}

std::vector<double> ExogenousModel::type_input(std::size_t c) const {
    if (event_features_) {
        const double* col = event_features_->column(c);
        return {col, col + event_features_->rows};
    }
    const auto& e = params_[type_embedding_];
    return {e.values.begin() + static_cast<std::ptrdiff_t>(c * embedding_dim_),
            e.values.begin() + static_cast<std::ptrdiff_t>((c + 1) * embedding_dim_)};
}

double ExogenousModel::value(std::size_t c, const SequenceContext& ctx) const {
    switch (kind_) {
        case ExogenousKind::Constant: return params_[mu_][c];
        case ExogenousKind::Naive: return inner_(params_[mu_][c]);
        case ExogenousKind::Linear: {
            const auto f = sequence_input(ctx);
            const std::span<const double> w(params_[weights_].values.data() + c * f.size(), f.size());
            return inner_(dot(w, f));
        }
        case ExogenousKind::Neural: {
            auto x = type_input(c);
            const auto fs = sequence_input(ctx);
            x.insert(x.end(), fs.begin(), fs.end());
            const auto& w1 = params_[w1_];
            double z = params_[b2_][0];
            for (std::size_t h = 0; h < hidden_dim_; ++h) {
                const std::span<const double> row(w1.values.data() + h * x.size(), x.size());
                z += params_[w2_][h] * std::tanh(dot(row, x) + params_[b1_][h]);
            }
            return inner_(z);
        }
    }
    return 0.0;
}

void ExogenousModel::backward(std::size_t c, const SequenceContext& ctx, double adjoint, GradientBlock g) const {
    if (adjoint == 0.0) return;
    switch (kind_) {
        case ExogenousKind::Constant:
            if (params_[mu_].trainable) g[mu_][c] += adjoint;
            return;
        case ExogenousKind::Naive:
            if (params_[mu_].trainable) g[mu_][c] += adjoint * inner_.derivative(params_[mu_][c]);
            return;
        case ExogenousKind::Linear: {
            const auto f = sequence_input(ctx);
            const std::size_t n = f.size();
            const double* w = params_[weights_].values.data() + c * n;
            const double dz = adjoint * inner_.derivative(dot({w, n}, f));
            if (params_[weights_].trainable) {
                for (std::size_t k = 0; k < n; ++k) g[weights_][c * n + k] += dz * f[k];
            }
            if (seq_dim_ == 0 && ctx.seq_index && *ctx.seq_index < num_sequences_ &&
                params_[seq_embedding_].trainable) {
                for (std::size_t k = 0; k < n; ++k) g[seq_embedding_][*ctx.seq_index * n + k] += dz * w[k];
            }
            return;
        }
        case ExogenousKind::Neural: {
            auto x = type_input(c);
            const std::size_t type_width = x.size();
            const auto fs = sequence_input(ctx);
            x.insert(x.end(), fs.begin(), fs.end());
            const std::size_t in = x.size();
            const auto& w1 = params_[w1_];
            std::vector<double> hidden(hidden_dim_);
            double z = params_[b2_][0];
            for (std::size_t h = 0; h < hidden_dim_; ++h) {
                hidden[h] = std::tanh(dot({w1.values.data() + h * in, in}, x) + params_[b1_][h]);
                z += params_[w2_][h] * hidden[h];
            }
            const double dz = adjoint * inner_.derivative(z);
            if (params_[b2_].trainable) g[b2_][0] += dz;
            std::vector<double> dx(in, 0.0);
            for (std::size_t h = 0; h < hidden_dim_; ++h) {
                if (params_[w2_].trainable) g[w2_][h] += dz * hidden[h];
                const double dpre = dz * params_[w2_][h] * (1.0 - hidden[h] * hidden[h]);
                if (params_[b1_].trainable) g[b1_][h] += dpre;
                for (std::size_t k = 0; k < in; ++k) {
                    if (w1.trainable) g[w1_][h * in + k] += dpre * x[k];
                    dx[k] += dpre * w1[h * in + k];
                }
            }
            if (type_embedding_ != kNone && params_[type_embedding_].trainable) {
                for (std::size_t k = 0; k < type_width; ++k) g[type_embedding_][c * embedding_dim_ + k] += dx[k];
            }
            if (seq_dim_ == 0 && ctx.seq_index && *ctx.seq_index < num_sequences_ &&
                params_[seq_embedding_].trainable) {
                for (std::size_t k = 0; k < embedding_dim_; ++k) {
                    g[seq_embedding_][*ctx.seq_index * embedding_dim_ + k] += dx[type_width + k];
                }
            }
            return;
        }
    }
}

void ExogenousModel::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double c = static_cast<double>(num_types_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i];
        if (p.role == ParamRole::Embedding) {
            fill_normal(p, rng, kEmbeddingSd);
        } else if (i == w1_) {
            const double r = 1.0 / std::sqrt(static_cast<double>(p.shape[1]));
            fill_uniform(p, rng, -r, r);
        } else if (i == w2_) {
            const double r = 1.0 / std::sqrt(static_cast<double>(hidden_dim_));
            fill_uniform(p, rng, -r, r);
        } else if (i == b1_) {
            std::fill(p.values.begin(), p.values.end(), 0.0);
        } else {
            fill_uniform(p, rng, 0.1 / c, 0.5 / c);
        }
    }
    project();
}

void ExogenousModel::project() {
    if (type_embedding_ != kNone) zero_row(params_[type_embedding_], num_types_, embedding_dim_);
}

// ------------------------------------------------------------------- impact

std::string to_string(ImpactKind kind) {
    switch (kind) {
        case ImpactKind::Basic: return "basic";
        case ImpactKind::Naive: return "naive";
        case ImpactKind::Factorized: return "factorized";
        case ImpactKind::Linear: return "linear";
        case ImpactKind::Bilinear: return "bilinear";
    }
    return "unknown";
}

ImpactKind parse_impact_kind(const std::string& name) {
    for (auto k : {ImpactKind::Basic, ImpactKind::Naive, ImpactKind::Factorized, ImpactKind::Linear,
                   ImpactKind::Bilinear}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown impact model '" + name + "' (basic|naive|factorized|linear|bilinear)");
}

ImpactModel::ImpactModel(ImpactKind kind, Activation inner, const ModelDims& dims, std::size_t basis)
    : kind_(kind),
      inner_(inner),
      num_types_(dims.num_types),
      basis_(basis),
      latent_dim_(dims.latent_dim),
      event_features_(dims.event_features) {
    inner_.validate();
    if (num_types_ == 0) throw std::invalid_argument("model needs at least one event type");
    if (basis_ == 0) throw std::invalid_argument("impact model needs at least one basis kernel");
    if (event_features_ && event_features_->cols != num_types_) {
        throw std::invalid_argument("event feature matrix does not have one column per type");
    }
    const std::size_t c = num_types_, m = basis_;
    auto add_features = [&] {
        if (event_features_) {
            feature_dim_ = event_features_->rows;
        } else {
            feature_dim_ = dims.embedding_dim;
            embedding_ = add(params_, Parameter("impact.type_embedding", {c + 1, feature_dim_}, ParamRole::Embedding));
        }
    };
    switch (kind_) {
        case ImpactKind::Basic:
        case ImpactKind::Naive:
            coef_ = add(params_, Parameter("impact.alpha", {c, c, m}, ParamRole::Impact));
            break;
        case ImpactKind::Factorized:
            if (latent_dim_ == 0) throw std::invalid_argument("factorized impact needs a positive latent dimension");
            u_ = add(params_, Parameter("impact.u", {c, m, latent_dim_}, ParamRole::Impact));
            v_ = add(params_, Parameter("impact.v", {c, m, latent_dim_}, ParamRole::Impact));
            break;
        case ImpactKind::Linear:
            add_features();
            weights_ = add(params_, Parameter("impact.weights", {c, m, feature_dim_}, ParamRole::Impact));
            break;
        case ImpactKind::Bilinear:
            add_features();
            weights_ = add(params_, Parameter("impact.weights", {m, feature_dim_, feature_dim_}, ParamRole::Impact));
            break;
    }
}

std::vector<double> ImpactModel::type_feature(std::size_t c) const {
    if (event_features_) {
        const double* col = event_features_->column(c);
        return {col, col + feature_dim_};
    }
    const auto& e = params_[embedding_];
    return {e.values.begin() + static_cast<std::ptrdiff_t>(c * feature_dim_),
            e.values.begin() + static_cast<std::ptrdiff_t>((c + 1) * feature_dim_)};
}

double ImpactModel::pre_activation(std::size_t c, std::size_t source, std::size_t m) const {
    switch (kind_) {
        case ImpactKind::Basic:
        case ImpactKind::Naive:
            return params_[coef_][(c * num_types_ + source) * basis_ + m];
        case ImpactKind::Factorized: {
            const std::size_t d = latent_dim_;
            return dot({params_[u_].values.data() + (c * basis_ + m) * d, d},
                       {params_[v_].values.data() + (source * basis_ + m) * d, d});
        }
        case ImpactKind::Linear: {
            const auto f = type_feature(source);
            return dot({params_[weights_].values.data() + (c * basis_ + m) * feature_dim_, feature_dim_}, f);
        }
        case ImpactKind::Bilinear: {
            const auto fc = type_feature(c);
            const auto fs = type_feature(source);
            const double* w = params_[weights_].values.data() + m * feature_dim_ * feature_dim_;
            double s = 0.0;
            for (std::size_t a = 0; a < feature_dim_; ++a) {
                s += fc[a] * dot({w + a * feature_dim_, feature_dim_}, fs);
            }
            return s;
        }
    }
    return 0.0;
}

void ImpactModel::coefficient(std::size_t c, std::size_t source, std::span<double> out) const {
    if (source >= num_types_) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    for (std::size_t m = 0; m < basis_; ++m) {
        const double z = pre_activation(c, source, m);
        out[m] = kind_ == ImpactKind::Basic ? z : inner_(z);
    }
}

std::vector<double> ImpactModel::coefficient_table() const {
    std::vector<double> table(num_types_ * num_types_ * basis_);
    for (std::size_t c = 0; c < num_types_; ++c) {
        for (std::size_t s = 0; s < num_types_; ++s) {
            coefficient(c, s, {table.data() + (c * num_types_ + s) * basis_, basis_});
        }
    }
    return table;
}

void ImpactModel::backward(std::span<const double> adjoint, GradientBlock g) const {
    const std::size_t C = num_types_, M = basis_;
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t s = 0; s < C; ++s) {
            for (std::size_t m = 0; m < M; ++m) {
                const std::size_t idx = (c * C + s) * M + m;
                if (adjoint[idx] == 0.0) continue;
                const double z = pre_activation(c, s, m);
                const double dz = kind_ == ImpactKind::Basic ? adjoint[idx] : adjoint[idx] * inner_.derivative(z);
                switch (kind_) {
                    case ImpactKind::Basic:
                    case ImpactKind::Naive:
                        if (params_[coef_].trainable) g[coef_][idx] += dz;
                        break;
                    case ImpactKind::Factorized: {
                        const std::size_t d = latent_dim_;
                        const double* u = params_[u_].values.data() + (c * M + m) * d;
                        const double* v = params_[v_].values.data() + (s * M + m) * d;
                        for (std::size_t k = 0; k < d; ++k) {
                            if (params_[u_].trainable) g[u_][(c * M + m) * d + k] += dz * v[k];
                            if (params_[v_].trainable) g[v_][(s * M + m) * d + k] += dz * u[k];
                        }
                        break;
                    }
                    case ImpactKind::Linear: {
                        const std::size_t D = feature_dim_;
                        const auto f = type_feature(s);
                        const double* w = params_[weights_].values.data() + (c * M + m) * D;
                        for (std::size_t k = 0; k < D; ++k) {
                            if (params_[weights_].trainable) g[weights_][(c * M + m) * D + k] += dz * f[k];
                            if (embedding_ != kNone && params_[embedding_].trainable) {
                                g[embedding_][s * D + k] += dz * w[k];
                            }
                        }
                        break;
                    }
                    case ImpactKind::Bilinear: {
                        const std::size_t D = feature_dim_;
                        const auto fc = type_feature(c);
                        const auto fs = type_feature(s);
                        const double* w = params_[weights_].values.data() + m * D * D;
                        const bool embed = embedding_ != kNone && params_[embedding_].trainable;
                        for (std::size_t a = 0; a < D; ++a) {
                            for (std::size_t b = 0; b < D; ++b) {
                                if (params_[weights_].trainable) g[weights_][m * D * D + a * D + b] += dz * fc[a] * fs[b];
                                if (embed) {
                                    g[embedding_][c * D + a] += dz * w[a * D + b] * fs[b];
                                    g[embedding_][s * D + b] += dz * fc[a] * w[a * D + b];
                                }
                            }
                        }
                        break;
                    }
                }
            }
        }
    }
}

void ImpactModel::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double scale = 0.1 / static_cast<double>(num_types_ * basis_);
    for (auto& p : params_) {
        if (p.role == ParamRole::Embedding) {
            fill_normal(p, rng, kEmbeddingSd);
        } else if (kind_ == ImpactKind::Factorized) {
            fill_uniform(p, rng, 0.0, std::sqrt(scale / static_cast<double>(latent_dim_)));
        } else {
            fill_uniform(p, rng, 0.0, scale);
        }
    }
    project();
}

void ImpactModel::project() {
    if (embedding_ != kNone) zero_row(params_[embedding_], num_types_, feature_dim_);
}

// ------------------------------------------------------------------- model

HawkesModel::HawkesModel(const Composition& comp, const ModelDims& dims)
    : exogenous(comp.exogenous, comp.exogenous_activation, dims),
      impact(comp.impact, comp.impact_activation, dims, comp.kernels.size()),
      kernels(comp.kernels),
      outer(comp.outer),
      memory_size(comp.memory_size),
      quadrature_nodes(comp.quadrature_nodes) {
    outer.validate();
    if (memory_size == 0) throw std::invalid_argument("memory size must be at least 1");
    if (quadrature_nodes == 0) throw std::invalid_argument("quadrature needs at least one node");
}

std::vector<Parameter*> HawkesModel::parameters() {
    std::vector<Parameter*> out;
    for (auto& p : exogenous.parameters()) out.push_back(&p);
    for (auto& p : impact.parameters()) out.push_back(&p);
    for (auto& p : kernels.parameters()) out.push_back(&p);
    return out;
}

std::vector<const Parameter*> HawkesModel::parameters() const {
    std::vector<const Parameter*> out;
    for (const auto& p : exogenous.parameters()) out.push_back(&p);
    for (const auto& p : impact.parameters()) out.push_back(&p);
    for (const auto& p : kernels.parameters()) out.push_back(&p);
    return out;
}

Parameter* HawkesModel::find_parameter(const std::string& name) {
    for (auto* p : parameters()) {
        if (p->name == name) return p;
    }
    return nullptr;
}

const Parameter* HawkesModel::find_parameter(const std::string& name) const {
    for (const auto* p : parameters()) {
        if (p->name == name) return p;
    }
    return nullptr;
}

void HawkesModel::initialize(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
    std::uint32_t seeds[2];
    seq.generate(std::begin(seeds), std::end(seeds));
    exogenous.initialize(seeds[0]);
    impact.initialize(seeds[1]);
}

void HawkesModel::project() {
    exogenous.project();
    impact.project();
    kernels.project();
}

}  // namespace ppkit
