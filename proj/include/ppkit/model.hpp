#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppkit/activation.hpp"
#include "ppkit/core_data.hpp"
#include "ppkit/kernels.hpp"
#include "ppkit/parameter.hpp"

namespace ppkit {

/// Shapes a model is built against. Zero feature widths mean "absent", in
/// which case learnable embeddings stand in for the features.
struct ModelDims {
    std::size_t num_types{0};
    std::size_t num_sequences{0};
    std::size_t seq_feature_dim{0};
    std::optional<FeatureMatrix> event_features;
    std::size_t embedding_dim{4};
    std::size_t latent_dim{2};
    std::size_t hidden_dim{8};

    /// Shapes of a corpus: C, S, D_s (when every sequence has features) and
    /// the event feature matrix.
    static ModelDims from_database(const Database& db);
};

/// Sequence-level inputs of the exogenous term.
struct SequenceContext {
    std::span<const double> seq_feature;
    std::optional<std::size_t> seq_index;
};

enum class ExogenousKind { Constant, Naive, Linear, Neural };
std::string to_string(ExogenousKind kind);
ExogenousKind parse_exogenous_kind(const std::string& name);

/// Time-independent base rate mu_c(f_c, f_s).
///   Constant  mu_c
///   Naive     g(mu_c)
///   Linear    g(w_c . f_s)
///   Neural    g(w2 . tanh(W1 [f_c; f_s] + b1) + b2)
class ExogenousModel {
public:
    ExogenousModel(ExogenousKind kind, Activation inner, const ModelDims& dims);

    ExogenousKind kind() const { return kind_; }
    const Activation& activation() const { return inner_; }
    std::size_t num_types() const { return num_types_; }
    /// Width of the sequence feature input; 0 when an embedding is used.
    std::size_t seq_feature_dim() const { return seq_dim_; }

    double value(std::size_t c, const SequenceContext& ctx) const;
    /// Adds adjoint * d value(c) / d theta into `g`.
    void backward(std::size_t c, const SequenceContext& ctx, double adjoint, GradientBlock g) const;

    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }
    /// Constant / Naive base vector (empty for other kinds).
    const Parameter* base_rates() const;

    void initialize(std::uint64_t seed);
    /// Re-zeroes frozen rows (embedding pad row).
    void project();

private:
    std::vector<double> sequence_input(const SequenceContext& ctx) const;
    std::vector<double> type_input(std::size_t c) const;

    ExogenousKind kind_;
    Activation inner_;
    std::size_t num_types_;
    std::size_t seq_dim_;
    std::size_t num_sequences_;
    std::size_t embedding_dim_;
    std::size_t hidden_dim_;
    std::optional<FeatureMatrix> event_features_;
    std::vector<Parameter> params_;
    // Indices into params_; npos when unused.
    std::size_t mu_{npos}, weights_{npos}, seq_embedding_{npos}, type_embedding_{npos};
    std::size_t w1_{npos}, b1_{npos}, w2_{npos}, b2_{npos};
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

enum class ImpactKind { Basic, Naive, Factorized, Linear, Bilinear };
std::string to_string(ImpactKind kind);
ImpactKind parse_impact_kind(const std::string& name);

/// Coefficients alpha_{c c' m} of the impact basis expansion.
///   Basic       a_{c c' m}
///   Naive       g(a_{c c' m})
///   Factorized  g(u_{c m} . v_{c' m})
///   Linear      g(w_{c m} . f_{c'})
///   Bilinear    g(f_c^T W_m f_{c'})
/// The padding source type C always yields zero coefficients.
class ImpactModel {
public:
    ImpactModel(ImpactKind kind, Activation inner, const ModelDims& dims, std::size_t basis);

    ImpactKind kind() const { return kind_; }
    const Activation& activation() const { return inner_; }
    std::size_t num_types() const { return num_types_; }
    std::size_t basis() const { return basis_; }

    /// alpha(c, source, .) into `out` (length M).
    void coefficient(std::size_t c, std::size_t source, std::span<double> out) const;
    /// All coefficients, row-major [C][C][M].
    std::vector<double> coefficient_table() const;
    /// Adds the pullback of `adjoint` ([C][C][M], d loss / d alpha) into `g`.
    void backward(std::span<const double> adjoint, GradientBlock g) const;

    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }

    void initialize(std::uint64_t seed);
    void project();

private:
    std::vector<double> type_feature(std::size_t c) const;
    double pre_activation(std::size_t c, std::size_t source, std::size_t m) const;

    ImpactKind kind_;
    Activation inner_;
    std::size_t num_types_;
    std::size_t basis_;
    std::size_t feature_dim_{0};
    std::size_t latent_dim_;
    std::optional<FeatureMatrix> event_features_;
    std::vector<Parameter> params_;
    std::size_t coef_{npos}, u_{npos}, v_{npos}, weights_{npos}, embedding_{npos};
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Choice of the four modules plus evaluation settings.
struct Composition {
    ExogenousKind exogenous{ExogenousKind::Naive};
    Activation exogenous_activation{};
    ImpactKind impact{ImpactKind::Naive};
    Activation impact_activation{};
    KernelBank kernels{KernelBank::exponential(1.0)};
    Activation outer{};
    std::size_t memory_size{20};
    std::size_t quadrature_nodes{16};
};

/// lambda_c(t) = g_out(mu_c + sum_j sum_m alpha_{c c_j m} kappa_m(t - t_j)) over
/// the last `memory_size` events.
class HawkesModel {
public:
    HawkesModel(const Composition& comp, const ModelDims& dims);

    ExogenousModel exogenous;
    ImpactModel impact;
    KernelBank kernels;
    Activation outer;
    std::size_t memory_size;
    std::size_t quadrature_nodes;

    std::size_t num_types() const { return exogenous.num_types(); }
    std::size_t basis() const { return kernels.size(); }

    /// All parameter groups: exogenous, then impact, then kernel.
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    Parameter* find_parameter(const std::string& name);
    const Parameter* find_parameter(const std::string& name) const;

    std::size_t impact_offset() const { return exogenous.parameters().size(); }
    std::size_t kernel_offset() const { return impact_offset() + impact.parameters().size(); }

    /// Small positive starting values (see README) from a seeded RNG.
    void initialize(std::uint64_t seed);
    /// Restores structural constraints after a parameter update.
    void project();
};

}  // namespace ppkit
