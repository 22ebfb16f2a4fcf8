#include <doctest.h>

#include <cmath>

#include "model_fixtures.hpp"
#include "oracles.hpp"
#include "ppkit/intensity.hpp"
#include "ppkit/quadrature.hpp"

using namespace ppkit;

namespace {

ModelDims dims(std::size_t C, std::size_t S = 1) {
    ModelDims d;
    d.num_types = C;
    d.num_sequences = S;
    return d;
}

Composition comp(ExogenousKind exo, ImpactKind impact, KernelBank kernels, Activation outer = {}) {
    Composition c;
    c.exogenous = exo;
    c.impact = impact;
    c.kernels = std::move(kernels);
    c.outer = outer;
    return c;
}

TrainingSample sample(std::size_t target, double t, double prev, std::vector<std::size_t> types,
                      std::vector<double> times) {
    TrainingSample s;
    s.target_type = target;
    s.target_time = t;
    s.prev_time = prev;
    s.history_types = std::move(types);
    s.history_times = std::move(times);
    return s;
}

// Direct sum of the composed intensity, kernels from their formulas.
double reference_intensity(const HawkesModel& model, std::size_t c, double t, const HistoryView& h,
                           const SequenceContext& ctx) {
    const auto params = gen::kernel_params(model.kernels);
    const auto kind = to_string(model.kernels.kind());
    double z = model.exogenous.value(c, ctx);
    std::vector<double> alpha(model.basis());
    for (std::size_t j = 0; j < h.types.size(); ++j) {
        if (h.types[j] >= model.num_types() || !(h.times[j] < t)) continue;
        model.impact.coefficient(c, h.types[j], alpha);
        const auto k = oracle::kernel_value(kind, params, t - h.times[j]);
        for (std::size_t m = 0; m < alpha.size(); ++m) z += alpha[m] * k[m];
    }
    return model.outer(z);
}

struct Case {
    Database db;
    HawkesModel model;
};

Case random_case(gen::Rng& rng, std::size_t i, Activation outer, bool features) {
    const auto exo = fixture::exogenous_kinds()[i % 4];
    const auto imp = fixture::impact_kinds()[(i / 4) % 5];
    const auto kk = gen::kernel_kinds()[(i / 20) % 6];
    auto db = fixture::corpus(rng, 1 + i % 3, 6, features);
    Composition c = comp(exo, imp, fixture::kernel_of(rng, kk, 2), outer);
    c.exogenous_activation = fixture::activations()[i % 3];
    c.impact_activation = fixture::activations()[(i + 1) % 3];
    c.memory_size = 3;
    HawkesModel model(c, fixture::dims_of(db));
    fixture::randomize(rng, model);
    return {std::move(db), std::move(model)};
}

}  // namespace

TEST_CASE("exogenous examples") {
    HawkesModel m(comp(ExogenousKind::Constant, ImpactKind::Basic, KernelBank::exponential(1.0)), dims(2));
    m.find_parameter("exo.mu")->values = {0.3, 0.7};
    CHECK(exo_value(m, 1) == 0.7);

    auto d = dims(2);
    d.seq_feature_dim = 2;
    Composition lin = comp(ExogenousKind::Linear, ImpactKind::Basic, KernelBank::exponential(1.0));
    lin.exogenous_activation = Activation::relu();
    HawkesModel l(lin, d);
    l.find_parameter("exo.weights")->values = {1.0, -1.0, -1.0, 0.0};
    const std::vector<double> fs{2.0, 0.5};
    SequenceContext ctx{fs, std::nullopt};
    CHECK(exo_value(l, 0, ctx) == doctest::Approx(1.5));
    CHECK(exo_value(l, 1, ctx) == 0.0);
    const std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(exo_value(l, 0, {wrong, std::nullopt}), std::invalid_argument);
}

TEST_CASE("impact coefficient examples") {
    HawkesModel m(comp(ExogenousKind::Constant, ImpactKind::Basic, KernelBank::multi_gauss({0.0, 1.0}, {0.5, 0.5})),
                  dims(2));
    auto* a = m.find_parameter("impact.alpha");
    (*a)[(1 * 2 + 0) * 2 + 0] = 0.2;
    (*a)[(1 * 2 + 0) * 2 + 1] = 0.1;
    CHECK(impact_coeff(m, 1, 0) == std::vector<double>{0.2, 0.1});
    CHECK(impact_coeff(m, 1, 2) == std::vector<double>{0.0, 0.0});

    auto d = dims(1);
    d.latent_dim = 1;
    HawkesModel f(comp(ExogenousKind::Constant, ImpactKind::Factorized, KernelBank::exponential(1.0)), d);
    f.find_parameter("impact.u")->values = {2.0};
    f.find_parameter("impact.v")->values = {0.3};
    CHECK(impact_coeff(f, 0, 0)[0] == doctest::Approx(0.6));
}

TEST_CASE("intensity examples") {
    HawkesModel m(comp(ExogenousKind::Constant, ImpactKind::Basic, KernelBank::exponential(1.0)), dims(1));
    m.find_parameter("exo.mu")->values = {0.2};
    m.find_parameter("impact.alpha")->values = {0.5};
    CHECK(intensity(m, sample(0, 1.0, 0.0, {1, 1}, {0.0, 0.0}), 0) == doctest::Approx(0.2));
    CHECK(intensity(m, sample(0, 1.0, 0.0, {1, 0}, {0.0, 0.0}), 0) == doctest::Approx(0.38394).epsilon(1e-5));

    m.outer = Activation::relu();
    m.find_parameter("exo.mu")->values = {-0.5};
    CHECK(intensity(m, sample(0, 1.0, 0.0, {1, 1}, {0.0, 0.0}), 0) == 0.0);
}

TEST_CASE("expected count examples") {
    HawkesModel m(comp(ExogenousKind::Constant, ImpactKind::Basic, KernelBank::exponential(1.0)), dims(2));
    m.find_parameter("exo.mu")->values = {2.0, 0.0};
    auto poisson = expected_counts(m, sample(0, 1.0, 0.0, {2}, {0.0}));
    CHECK(poisson[0] == doctest::Approx(2.0));
    CHECK(poisson[1] == 0.0);

    m.find_parameter("exo.mu")->values = {0.0, 0.0};
    m.find_parameter("impact.alpha")->values = {0.5, 0.0, 0.0, 0.0};
    auto hawkes = expected_counts(m, sample(0, 2.0, 1.0, {0}, {0.0}));
    CHECK(hawkes[0] == doctest::Approx(0.11627).epsilon(1e-4));
    CHECK(hawkes[0] == doctest::Approx(0.5 * (std::exp(-1.0) - std::exp(-2.0))).epsilon(1e-13));
    CHECK_THROWS(expected_counts(m, sample(0, 1.0, 2.0, {0}, {0.0})));
}

TEST_CASE("gauss-legendre rule integrates polynomials exactly") {
    const auto& rule = gauss_legendre(16);
    double sum = 0.0, x30 = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        sum += rule.weights[i];
        x30 += rule.weights[i] * std::pow(rule.nodes[i], 30);
    }
    CHECK(sum == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(x30 == doctest::Approx(2.0 / 31.0).epsilon(1e-12));
}

TEST_CASE("property: identity-outer counts equal fine quadrature") {
    gen::Rng rng(21);
    for (std::size_t i = 0; i < 120; ++i) {
        auto cs = random_case(rng, i, Activation::identity(), i % 2 == 0);
        const auto kk = cs.model.kernels.kind();
        if (kk == KernelKind::Gate || kk == KernelKind::Powerlaw) continue;
        if (kk == KernelKind::Exponential) cs.model.kernels = KernelBank::exponential(gen::uniform(rng, 0.2, 3.0), 0.0);
        for (const auto& s : fixture::all_samples(cs.db, 3)) {
            const auto exact = expected_counts(cs.model, s);
            const auto quad = expected_counts_quadrature(cs.model, s, 256);
            for (std::size_t c = 0; c < exact.size(); ++c) CHECK(std::abs(exact[c] - quad[c]) <= 1e-9);
        }
    }
}

TEST_CASE("property: evaluator matches the direct formula and adaptive integration") {
    gen::Rng rng(22);
    for (std::size_t i = 0; i < 360; ++i) {
        const auto outer = fixture::activations()[i % 3];
        auto cs = random_case(rng, i, outer, (i / 3) % 2 == 0);
        IntensityEvaluator eval(cs.model);
        const auto params = gen::kernel_params(cs.model.kernels);
        auto breaks_of = [&](const TrainingSample& s) {
            std::vector<double> out;
            for (std::size_t j = 0; j < s.history_times.size(); ++j) {
                for (double b : oracle::kernel_breaks(to_string(cs.model.kernels.kind()), params)) {
                    out.push_back(s.history_times[j] + b);
                }
            }
            return out;
        };
        for (const auto& s : fixture::all_samples(cs.db, 3)) {
            const auto h = history_of(s);
            const auto ctx = context_of(s);
            for (std::size_t c = 0; c < cs.model.num_types(); ++c) {
                const double ref = reference_intensity(cs.model, c, s.target_time, h, ctx);
                CHECK(eval.intensity(c, s.target_time, h, ctx) == doctest::Approx(ref).epsilon(1e-12));
                if (outer.kind != ActivationKind::Identity) CHECK(ref >= 0.0);
            }
            if (s.target_time - s.prev_time < 1e-9) continue;
            const auto counts = expected_counts(cs.model, s);
            const auto fine = expected_counts_quadrature(cs.model, s, 512);
            for (std::size_t c = 0; c < cs.model.num_types(); ++c) {
                const double ref = oracle::integrate(
                    [&](double t) { return reference_intensity(cs.model, c, t, h, ctx); }, s.prev_time, s.target_time,
                    breaks_of(s));
                if (outer.kind == ActivationKind::Identity) {
                    CHECK(std::abs(counts[c] - ref) <= 1e-9);
                } else if (cs.model.kernels.kind() != KernelKind::Gate &&
                           cs.model.kernels.kind() != KernelKind::Powerlaw &&
                           cs.model.kernels.kind() != KernelKind::Exponential) {
                    CHECK(std::abs(fine[c] - ref) <= 1e-7 * std::max(1.0, ref));
                }
            }
        }
    }
}

TEST_CASE("property: counts are additive over interval splits") {
    gen::Rng rng(23);
    for (std::size_t i = 0; i < 120; ++i) {
        const auto outer = fixture::activations()[i % 3];
        auto cs = random_case(rng, i * 3, outer, i % 2 == 0);
        IntensityEvaluator eval(cs.model);
        const auto smooth = cs.model.kernels.kind() != KernelKind::Gate &&
                            cs.model.kernels.kind() != KernelKind::Powerlaw &&
                            cs.model.kernels.kind() != KernelKind::Exponential;
        for (const auto& s : fixture::all_samples(cs.db, 3)) {
            const auto h = history_of(s);
            const auto ctx = context_of(s);
            const double t0 = s.prev_time, t2 = s.target_time, t1 = 0.5 * (t0 + t2);
            const std::size_t C = cs.model.num_types();
            std::vector<double> a(C), b(C), whole(C);
            if (outer.kind == ActivationKind::Identity) {
                eval.expected_counts(t0, t1, h, ctx, a);
                eval.expected_counts(t1, t2, h, ctx, b);
                eval.expected_counts(t0, t2, h, ctx, whole);
                for (std::size_t c = 0; c < C; ++c) CHECK(std::abs(a[c] + b[c] - whole[c]) <= 1e-12 * (1 + whole[c]));
            } else if (smooth) {
                eval.expected_counts_quadrature(t0, t1, h, ctx, 64, a);
                eval.expected_counts_quadrature(t1, t2, h, ctx, 64, b);
                eval.expected_counts_quadrature(t0, t2, h, ctx, 64, whole);
                for (std::size_t c = 0; c < C; ++c) CHECK(std::abs(a[c] + b[c] - whole[c]) <= 1e-7 * (1 + whole[c]));
            }
        }
    }
}

TEST_CASE("property: compensator derivative is the intensity") {
    gen::Rng rng(24);
    for (std::size_t i = 0; i < 120; ++i) {
        auto cs = random_case(rng, i, Activation::identity(), i % 2 == 1);
        IntensityEvaluator eval(cs.model);
        for (const auto& s : fixture::all_samples(cs.db, 3)) {
            const auto h = history_of(s);
            const auto ctx = context_of(s);
            const double t = s.target_time + 0.37;
            const std::size_t C = cs.model.num_types();
            const auto params = gen::kernel_params(cs.model.kernels);
            bool near = false;
            for (double tj : s.history_times) {
                for (double b : oracle::kernel_breaks(to_string(cs.model.kernels.kind()), params)) {
                    near = near || std::abs(t - tj - b) < 1e-3;
                }
            }
            if (near) continue;
            for (std::size_t c = 0; c < C; ++c) {
                auto compensator = [&](double x) {
                    std::vector<double> out(C);
                    eval.expected_counts(s.prev_time, x, h, ctx, out);
                    return out[c];
                };
                const double fd = oracle::central_difference(compensator, t, 1e-6);
                const double lam = eval.intensity(c, t, h, ctx);
                CHECK(std::abs(fd - lam) <= 1e-5 * std::max(1.0, std::abs(lam)));
            }
        }
    }
}

TEST_CASE("poisson likelihood gradient in closed form") {
    Database db;
    db.intern_type("x");
    EventSequence seq;
    seq.times = {0.5, 1.25, 2.0, 3.5};
    seq.events = {0, 0, 0, 0};
    seq.t_start = 0.0;
    seq.t_stop = 3.5;
    db.add_sequence("s", seq);
    HawkesModel m(comp(ExogenousKind::Constant, ImpactKind::Basic, KernelBank::exponential(1.0)), dims(1));
    m.find_parameter("exo.mu")->values = {0.8};
    m.find_parameter("impact.alpha")->trainable = false;
    const auto samples = fixture::all_samples(db, 2);
    const auto lg = loss_and_grad(m, LossKind::MaxLogLike, samples);
    CHECK(lg.grad[0][0] == doctest::Approx(-4.0 / 0.8 + 3.5).epsilon(1e-12));
    CHECK(lg.value == doctest::Approx(-4.0 * std::log(0.8) + 0.8 * 3.5).epsilon(1e-12));
}

TEST_CASE("property: gradients match finite differences on random small models") {
    gen::Rng rng(25);
    std::size_t failures = 0, total = 0;
    for (std::size_t i = 0; i < 240; ++i) {
        const auto outer = fixture::activations()[(i / 120) % 3 == 0 ? i % 3 : (i + 1) % 3];
        auto cs = random_case(rng, i % 120, outer, i % 2 == 0);
        const auto batch = fixture::all_samples(cs.db, 3);
        for (auto kind : fixture::loss_kinds()) {
            const auto r = fixture::check_gradient(cs.model, kind, batch);
            CAPTURE(i);
            CAPTURE(r.worst_name);
            CHECK(r.failures == 0);
            failures += r.failures;
            total += r.entries;
        }
    }
    MESSAGE("checked " << total << " gradient entries");
}

TEST_CASE("zero adjoints give zero gradients") {
    gen::Rng rng(26);
    auto cs = random_case(rng, 47, Activation::softplus(), true);
    const auto batch = fixture::all_samples(cs.db, 3);
    std::vector<SampleAdjoint> zero(batch.size(), SampleAdjoint{0.0, std::vector<double>(cs.model.num_types(), 0.0)});
    for (const auto& g : model_param_grad(cs.model, batch, zero)) {
        for (double v : g) CHECK(v == 0.0);
    }
}

TEST_CASE("infectivity examples") {
    HawkesModel m(comp(ExogenousKind::Constant, ImpactKind::Basic, KernelBank::exponential(1.0)), dims(3));
    CHECK(infectivity_matrix(m) == std::vector<double>(9, 0.0));
    (*m.find_parameter("impact.alpha"))[0 * 3 + 1] = 0.5;
    auto g = infectivity_matrix(m);
    CHECK(g[0 * 3 + 1] == doctest::Approx(0.5));

    HawkesModel d(comp(ExogenousKind::Constant, ImpactKind::Basic, KernelBank::gaussian(0.4)), dims(3));
    for (std::size_t c = 0; c < 3; ++c) (*d.find_parameter("impact.alpha"))[c * 3 + c] = 1.0 + c;
    auto diag = infectivity_matrix(d);
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t s = 0; s < 3; ++s) CHECK(diag[c * 3 + s] == (c == s ? doctest::Approx(0.5 * (1.0 + c)) : 0.0));
    }

    HawkesModel p(comp(ExogenousKind::Constant, ImpactKind::Basic, KernelBank::powerlaw(2.5, 1.0)), dims(1));
    p.find_parameter("impact.alpha")->values = {0.2};
    CHECK(infectivity_matrix(p)[0] == doctest::Approx(0.2 * 2.5));
}

TEST_CASE("embedding fallback yields finite outputs including the pad type") {
    gen::Rng rng(27);
    for (auto exo : {ExogenousKind::Linear, ExogenousKind::Neural}) {
        for (auto imp : {ImpactKind::Linear, ImpactKind::Bilinear}) {
            HawkesModel m(comp(exo, imp, KernelBank::exponential(1.0)), dims(3, 2));
            m.initialize(5);
            for (std::size_t c = 0; c < 3; ++c) {
                for (std::size_t s = 0; s <= 3; ++s) {
                    for (double a : impact_coeff(m, c, s)) CHECK(std::isfinite(a));
                }
                CHECK(impact_coeff(m, c, 3) == std::vector<double>{0.0});
                CHECK(std::isfinite(exo_value(m, c, {{}, 1})));
                CHECK(std::isfinite(exo_value(m, c, {{}, std::nullopt})));
            }
            if (auto* e = m.find_parameter("impact.type_embedding")) {
                for (std::size_t k = 0; k < e->shape[1]; ++k) CHECK((*e)[3 * e->shape[1] + k] == 0.0);
            }
        }
    }
}

TEST_CASE("upper bound dominates the intensity over the window") {
    gen::Rng rng(28);
    for (std::size_t i = 0; i < 360; ++i) {
        const auto outer = fixture::activations()[i % 3];
        auto cs = random_case(rng, i, outer, i % 2 == 0);
        IntensityEvaluator eval(cs.model);
        for (const auto& s : fixture::all_samples(cs.db, 3)) {
            const auto h = history_of(s);
            const auto ctx = context_of(s);
            const double t0 = s.target_time, t1 = t0 + gen::uniform(rng, 0.01, 2.0);
            std::vector<double> bound(cs.model.num_types());
            eval.intensity_upper_bound(t0, t1, h, ctx, bound);
            for (int k = 0; k < 50; ++k) {
                const double t = gen::uniform(rng, t0, t1);
                for (std::size_t c = 0; c < bound.size(); ++c) {
                    CHECK(eval.intensity(c, t, h, ctx) <= bound[c] * (1 + 1e-12) + 1e-15);
                }
            }
        }
    }
}

TEST_CASE("activations") {
    CHECK(Activation::softplus(2.0)(0.0) == doctest::Approx(std::log(2.0) / 2.0));
    CHECK(Activation::softplus(1.0)(50.0) == doctest::Approx(50.0));
    CHECK(Activation::softplus(1.0)(-800.0) >= 0.0);
    Activation printed = Activation::softplus(1.0);
    printed.printed_softplus = true;
    CHECK(printed(1.0) == doctest::Approx(std::log(1 + std::exp(-1.0))));
    CHECK_FALSE(printed.increasing());
    for (double x : {-2.0, -0.3, 0.4, 3.0}) {
        for (const auto& g : {Activation::softplus(0.7), printed, Activation::relu(), Activation::identity()}) {
            CHECK(g.derivative(x) == doctest::Approx(oracle::central_difference(g, x, 1e-6)).epsilon(1e-6));
        }
    }
    CHECK_THROWS_AS(Activation::softplus(0.0).validate(), std::invalid_argument);
    CHECK(parse_activation_kind("softplus") == ActivationKind::Softplus);
}
