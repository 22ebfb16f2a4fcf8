#include "ppkit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ppkit/csv.hpp"
#include "ppkit/export.hpp"
#include "ppkit/ingestion.hpp"
#include "ppkit/intensity.hpp"
#include "ppkit/learning.hpp"
#include "ppkit/manifest.hpp"
#include "ppkit/presets.hpp"
#include "ppkit/simulation.hpp"

namespace ppkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
    CliError(int code, const std::string& msg) : std::runtime_error(msg), exit_code(code) {}
    int exit_code;
};

std::string config_scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

// Keys of a flat JSON object fill options not given on the command line.
void apply_config(CLI::App& sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError(kExitUsage, "cannot read config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw CliError(kExitUsage, "config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw CliError(kExitUsage, "config file '" + path + "' must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr) opt = sub.get_option_no_throw(key);
        if (opt == nullptr || key == "config") {
            throw CliError(kExitUsage, "config file '" + path + "': unknown option '" + key + "'");
        }
        if (opt->count() > 0) continue;
        if (value.is_array()) {
            for (const auto& v : value) opt->add_result(config_scalar(v));
        } else {
            opt->add_result(config_scalar(value));
        }
        try {
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw CliError(kExitUsage, "config file '" + path + "': " + e.what());
        }
    }
}

std::string output_dir() {
    const char* env = std::getenv("PPKIT_OUTPUT_DIR");
    return env && *env ? env : ".";
}

std::string default_output(const std::string& given, const std::string& file_name) {
    if (!given.empty()) return given;
    return (fs::path(output_dir()) / file_name).string();
}

void ensure_parent(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

struct DataOptions {
    std::string path;
    ColumnMapping mapping;
    std::string seq_features;
    std::string seq_domain;
    std::vector<std::string> seq_columns;
    std::string seq_normalize{"none"};
    std::string event_features;
    std::string event_domain;
    std::vector<std::string> event_columns;
    std::string event_normalize{"none"};
};

void add_mapping_options(CLI::App* app, DataOptions& d) {
    app->add_option("--id-column", d.mapping.seq_id, "Sequence id column")->capture_default_str();
    app->add_option("--time-column", d.mapping.time, "Event time column")->capture_default_str();
    app->add_option("--event-column", d.mapping.event, "Event type column")->capture_default_str();
    app->add_option("--t-start-column", d.mapping.t_start, "Optional window start column");
    app->add_option("--t-stop-column", d.mapping.t_stop, "Optional window stop column");
    app->add_option("--seq-features", d.seq_features, "CSV of sequence features");
    app->add_option("--seq-domain", d.seq_domain, "Key column of the sequence feature file (default: id column)");
    app->add_option("--seq-columns", d.seq_columns, "Sequence feature columns as name:categorical|numerical")
        ->delimiter(',');
    app->add_option("--seq-normalize", d.seq_normalize, "none, minmax or zscore")->capture_default_str();
    app->add_option("--event-features", d.event_features, "CSV of event type features");
    app->add_option("--event-domain", d.event_domain, "Key column of the event feature file (default: event column)");
    app->add_option("--event-columns", d.event_columns, "Event feature columns as name:categorical|numerical")
        ->delimiter(',');
    app->add_option("--event-normalize", d.event_normalize, "none, minmax or zscore")->capture_default_str();
}

FeatureDomainSpec feature_spec(const std::vector<std::string>& columns, const std::string& normalize) {
    FeatureDomainSpec spec;
    for (const auto& col : columns) {
        const auto colon = col.rfind(':');
        if (colon == std::string::npos) {
            spec.columns.emplace_back(col, FeatureKind::Numerical);
        } else {
            spec.columns.emplace_back(col.substr(0, colon), parse_feature_kind(col.substr(colon + 1)));
        }
    }
    spec.normalize = parse_normalization(normalize);
    return spec;
}

Database load_data(const DataOptions& d) {
    auto db = load_sequences_csv(d.path, d.mapping);
    if (!d.seq_features.empty()) {
        if (d.seq_columns.empty()) throw std::invalid_argument("--seq-features needs --seq-columns");
        db = load_seq_features_csv(d.seq_features, d.seq_domain.empty() ? d.mapping.seq_id : d.seq_domain,
                                   feature_spec(d.seq_columns, d.seq_normalize), std::move(db));
    }
    if (!d.event_features.empty()) {
        if (d.event_columns.empty()) throw std::invalid_argument("--event-features needs --event-columns");
        db = load_event_features_csv(d.event_features, d.event_domain.empty() ? d.mapping.event : d.event_domain,
                                     feature_spec(d.event_columns, d.event_normalize), std::move(db));
    }
    return db;
}

// Re-indexes the corpus types onto the manifest's type order.
Database align_types(Database db, const ModelManifest& manifest) {
    std::map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < manifest.type_names.size(); ++c) index[manifest.type_names[c]] = c;
    std::vector<std::size_t> remap(db.num_types);
    for (std::size_t c = 0; c < db.num_types; ++c) {
        const auto it = index.find(db.idx2type[c]);
        if (it == index.end()) {
            throw CliError(kExitIncompatible, "data has " + std::to_string(db.num_types) + " event types but the model has " +
                                                  std::to_string(manifest.dims.num_types) + "; type '" +
                                                  db.idx2type[c] + "' is unknown to the model");
        }
        remap[c] = it->second;
    }
    for (auto& seq : db.sequences) {
        for (auto& e : seq.events) e = remap[e];
    }
    db.num_types = manifest.type_names.size();
    db.idx2type = manifest.type_names;
    db.type2idx.clear();
    for (std::size_t c = 0; c < db.idx2type.size(); ++c) db.type2idx[db.idx2type[c]] = c;
    db.event_features = manifest.dims.event_features;
    const std::size_t want = manifest.dims.seq_feature_dim;
    const auto have = db.seq_feature_dim().value_or(0);
    if (want > 0 && have != want) {
        throw CliError(kExitIncompatible, "model expects sequence features of width " + std::to_string(want) +
                                              " but the data provides width " + std::to_string(have));
    }
    return db;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) {
    std::seed_seq s{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32), 0x51u};
    std::uint32_t w[2];
    s.generate(w, w + 2);
    return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

KernelBank explicit_kernels(KernelKind kind, const std::vector<double>& p) {
    auto need = [&](std::size_t lo, std::size_t hi) {
        if (p.size() < lo || p.size() > hi) {
            throw std::invalid_argument(to_string(kind) + " kernel takes " + std::to_string(lo) +
                                        (hi > lo ? " to " + std::to_string(hi) : "") + " parameters");
        }
    };
    KernelBank bank = KernelBank::exponential(1.0);
    switch (kind) {
        case KernelKind::Exponential:
            need(1, 2);
            bank = KernelBank::exponential(p[0], p.size() > 1 ? p[1] : 0.0);
            break;
        case KernelKind::Rayleigh:
            need(1, 1);
            bank = KernelBank::rayleigh(p[0]);
            break;
        case KernelKind::Gaussian:
            need(1, 1);
            bank = KernelBank::gaussian(p[0]);
            break;
        case KernelKind::Powerlaw:
            need(2, 2);
            bank = KernelBank::powerlaw(p[0], p[1]);
            break;
        case KernelKind::Gate:
            need(2, 2);
            bank = KernelBank::gate(p[0], p[1]);
            break;
        case KernelKind::MultiGauss: {
            if (p.empty() || p.size() % 2 != 0) {
                throw std::invalid_argument("multigauss kernel takes M centers followed by M widths");
            }
            const auto half = static_cast<std::ptrdiff_t>(p.size() / 2);
            bank = KernelBank::multi_gauss({p.begin(), p.begin() + half}, {p.begin() + half, p.end()});
            break;
        }
    }
    bank.validate();
    return bank;
}

void set_printed_softplus(Activation& a) {
    if (a.kind == ActivationKind::Softplus) a.printed_softplus = true;
}

HawkesModel load_model(const std::string& path, ModelManifest& manifest) {
    manifest = load_manifest(path);
    return build_model(manifest);
}

// ---------------------------------------------------------------- fit

struct FitOptions {
    DataOptions data;
    std::string preset;
    std::string exogenous, exogenous_activation, impact, impact_activation, kernel, outer, loss;
    std::vector<double> kernel_params;
    std::size_t basis{4};
    double beta{1.0};
    bool paper_softplus{false};
    bool train_kernel{false};
    std::size_t embedding_dim{4}, latent_dim{2}, hidden_dim{8};
    std::size_t quadrature_nodes{16};
    std::string optimizer{"adam"};
    std::vector<std::string> nonnegative;
    std::vector<std::string> l1_roles;
    bool no_shuffle{false};
    FitConfig cfg;
    std::size_t memory_size{20};
    std::string output, report;
};

void register_fit(CLI::App& app, FitOptions& o) {
    app.add_option("data", o.data.path, "Event CSV")->required();
    add_mapping_options(&app, o.data);
    std::string presets;
    for (const auto& n : preset_names()) presets += (presets.empty() ? "" : ", ") + n;
    app.add_option("--preset", o.preset, "Model recipe: " + presets);
    app.add_option("--exogenous", o.exogenous, "constant, naive, linear or neural");
    app.add_option("--exogenous-activation", o.exogenous_activation, "identity, relu or softplus");
    app.add_option("--impact", o.impact, "basic, naive, factorized, linear or bilinear");
    app.add_option("--impact-activation", o.impact_activation, "identity, relu or softplus");
    app.add_option("--kernel", o.kernel, "exponential, rayleigh, gaussian, powerlaw, gate or multigauss");
    app.add_option("--kernel-params", o.kernel_params, "Kernel parameters (multigauss: centers then widths)")
        ->delimiter(',');
    app.add_option("--basis", o.basis, "Basis size of the default multigauss grid")->capture_default_str();
    app.add_option("--outer", o.outer, "Outer activation: identity, relu or softplus");
    app.add_option("--softplus-beta", o.beta, "Softplus sharpness")->capture_default_str();
    app.add_flag("--paper-softplus", o.paper_softplus, "Use the sign-flipped softplus variant");
    app.add_flag("--train-kernel", o.train_kernel, "Learn kernel parameters too");
    app.add_option("--loss", o.loss, "mle, lse or ce (default: the preset's, else mle)");
    app.add_option("--embedding-dim", o.embedding_dim)->capture_default_str();
    app.add_option("--latent-dim", o.latent_dim)->capture_default_str();
    app.add_option("--hidden-dim", o.hidden_dim)->capture_default_str();
    app.add_option("--quadrature-nodes", o.quadrature_nodes)->capture_default_str();
    app.add_option("--epochs", o.cfg.epochs)->capture_default_str();
    app.add_option("--batch-size", o.cfg.batch_size)->capture_default_str();
    app.add_option("--lr", o.cfg.learning_rate, "Learning rate")->capture_default_str();
    app.add_option("--lr-decay", o.cfg.lr_decay_gamma, "Per-epoch learning-rate factor")->capture_default_str();
    app.add_option("--optimizer", o.optimizer, "adam or sgd")->capture_default_str();
    app.add_option("--beta1", o.cfg.adam.beta1)->capture_default_str();
    app.add_option("--beta2", o.cfg.adam.beta2)->capture_default_str();
    app.add_option("--adam-epsilon", o.cfg.adam.epsilon)->capture_default_str();
    app.add_option("--l1", o.cfg.l1_weight, "L1 weight")->capture_default_str();
    app.add_option("--l2", o.cfg.l2_weight, "L2 weight")->capture_default_str();
    app.add_option("--l1-roles", o.l1_roles, "Roles under L1: exogenous, impact, kernel, embedding")->delimiter(',');
    app.add_option("--nonnegative", o.nonnegative, "Parameter groups clipped at zero, or 'none'")->delimiter(',');
    app.add_option("--memory-size", o.memory_size, "History length per sample")->capture_default_str();
    app.add_option("--seed", o.cfg.rng_seed, "Seed for initialization and shuffling")->capture_default_str();
    app.add_option("--val-fraction", o.cfg.validation_fraction)->capture_default_str();
    app.add_flag("--no-shuffle", o.no_shuffle, "Keep the (sequence, event) sample order");
    app.add_option("--threads", o.cfg.threads)->capture_default_str();
    app.add_option("-o,--output", o.output, "Manifest path (default: $PPKIT_OUTPUT_DIR/model.json)");
    app.add_option("--report", o.report, "Report path (default: next to the manifest)");
}

ParamRole parse_role_flag(const std::string& s) {
    if (s == "exogenous") return ParamRole::Exogenous;
    if (s == "impact") return ParamRole::Impact;
    if (s == "kernel") return ParamRole::Kernel;
    if (s == "embedding") return ParamRole::Embedding;
    throw std::invalid_argument("unknown parameter role '" + s + "'");
}

json fit_config_json(const FitConfig& c, LossKind loss) {
    json nn = nullptr;
    if (c.nonnegative) nn = std::vector<std::string>(c.nonnegative->begin(), c.nonnegative->end());
    std::vector<int> roles;
    for (auto r : c.l1_roles) roles.push_back(static_cast<int>(r));
    return {{"epochs", c.epochs},       {"batch_size", c.batch_size},
            {"lr", c.learning_rate},    {"lr_decay", c.lr_decay_gamma},
            {"optimizer", to_string(c.optimizer)},
            {"adam", {c.adam.beta1, c.adam.beta2, c.adam.epsilon}},
            {"l1", c.l1_weight},        {"l2", c.l2_weight},
            {"l1_roles", roles},        {"nonnegative", nn},
            {"memory_size", c.memory_size ? json(*c.memory_size) : json(nullptr)},
            {"seed", c.rng_seed},       {"val_fraction", c.validation_fraction},
            {"shuffle", c.shuffle},     {"loss", to_string(loss)}};
}

int cmd_fit(FitOptions& o, std::ostream& out) {
    const auto db = load_data(o.data);
    const auto scale = time_scale(db);

    if (!o.preset.empty() && !is_preset(o.preset)) {
        std::string list;
        for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
        throw CliError(kExitUsage, "unknown preset '" + o.preset + "'; valid presets: " + list);
    }
    // Explicit compositions start from the plain linear Hawkes recipe.
    Preset recipe = make_preset(o.preset.empty() ? "linear-hawkes-exp" : o.preset, scale, o.basis);
    auto& comp = recipe.composition;
    if (!o.exogenous.empty()) comp.exogenous = parse_exogenous_kind(o.exogenous);
    if (!o.exogenous_activation.empty()) comp.exogenous_activation.kind = parse_activation_kind(o.exogenous_activation);
    if (!o.impact.empty()) comp.impact = parse_impact_kind(o.impact);
    if (!o.impact_activation.empty()) comp.impact_activation.kind = parse_activation_kind(o.impact_activation);
    if (!o.outer.empty()) comp.outer.kind = parse_activation_kind(o.outer);
    if (!o.kernel.empty() || !o.kernel_params.empty()) {
        const auto kind = o.kernel.empty() ? comp.kernels.kind() : parse_kernel_kind(o.kernel);
        comp.kernels = o.kernel_params.empty() ? default_kernels(kind, scale, o.basis)
                                                : explicit_kernels(kind, o.kernel_params);
    }
    for (Activation* a : {&comp.exogenous_activation, &comp.impact_activation, &comp.outer}) {
        if (a->kind == ActivationKind::Softplus) a->beta = o.beta;
        if (o.paper_softplus) set_printed_softplus(*a);
        a->validate();
    }
    comp.kernels.set_trainable(o.train_kernel);
    comp.memory_size = o.memory_size;
    comp.quadrature_nodes = o.quadrature_nodes;
    const LossKind loss = o.loss.empty() ? recipe.loss : parse_loss_kind(o.loss);

    auto dims = ModelDims::from_database(db);
    dims.embedding_dim = o.embedding_dim;
    dims.latent_dim = o.latent_dim;
    dims.hidden_dim = o.hidden_dim;
    HawkesModel model(comp, dims);
    model.initialize(o.cfg.rng_seed);

    FitConfig cfg = o.cfg;
    cfg.optimizer = parse_optimizer_kind(o.optimizer);
    cfg.shuffle = !o.no_shuffle;
    cfg.memory_size = o.memory_size;
    if (!o.l1_roles.empty()) {
        cfg.l1_roles.clear();
        for (const auto& r : o.l1_roles) cfg.l1_roles.insert(parse_role_flag(r));
    }
    if (!o.nonnegative.empty()) {
        if (o.nonnegative.size() == 1 && o.nonnegative.front() == "none") {
            cfg.nonnegative.reset();
        } else {
            cfg.nonnegative = std::set<std::string>(o.nonnegative.begin(), o.nonnegative.end());
        }
    } else {
        cfg.nonnegative = recipe.nonnegative;
    }
    cfg.validate();

    const std::string manifest_path = default_output(o.output, "model.json");
    std::string report_path = o.report;
    if (report_path.empty()) {
        fs::path p(manifest_path);
        report_path = (p.parent_path() / (p.stem().string() + ".report.jsonl")).string();
    }
    ensure_parent(manifest_path);
    ensure_parent(report_path);

    Provenance prov;
    prov.seed = cfg.rng_seed;
    prov.loss = to_string(loss);
    prov.preset = o.preset;
    {
        const auto initial = json::parse(manifest_to_json(make_manifest(model, dims, db.idx2type, prov)));
        json canon = {{"composition", initial.at("composition")}, {"dims", initial.at("dims")},
                      {"fit", fit_config_json(cfg, loss)}};
        prov.config_hash = sha256_hex(canon.dump());
    }

    std::ofstream report_file(report_path, std::ios::binary);
    if (!report_file) throw std::runtime_error("cannot write '" + report_path + "'");
    const auto report = fit(model, db, cfg, loss, [&](const EpochReport& e) {
        report_file << e.to_json() << '\n';
        report_file.flush();
    });

    save_manifest(make_manifest(model, dims, db.idx2type, prov), manifest_path);
    const auto& last = report.epochs.back();
    json summary = {{"manifest", manifest_path},
                    {"report", report_path},
                    {"epochs", report.epochs.size()},
                    {"loss", to_string(loss)},
                    {"train_loss", last.train_loss},
                    {"train_eval_loss", last.train_eval_loss},
                    {"val_loss", last.val_loss ? json(*last.val_loss) : json(nullptr)},
                    {"config_hash", prov.config_hash}};
    out << summary.dump() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- validate

struct ValidateOptions {
    DataOptions data;
    std::string model;
    std::string loss;
    std::size_t threads{1};
};

int cmd_validate(ValidateOptions& o, std::ostream& out) {
    ModelManifest manifest;
    const auto model = load_model(o.model, manifest);
    const auto db = align_types(load_data(o.data), manifest);
    const std::string loss_name = !o.loss.empty() ? o.loss : (manifest.provenance.loss.empty() ? "mle" : manifest.provenance.loss);
    const LossKind loss = parse_loss_kind(loss_name);
    const double value = validation(model, db, loss, o.threads);
    json j = {{"loss", to_string(loss)}, {"average_loss", value}, {"samples", db.num_events()}};
    out << j.dump() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string model;
    DataOptions data;
    std::size_t sequences{1};
    double t_begin{0.0};
    double t_end{100.0};
    std::size_t max_events{1000};
    std::uint64_t seed{0};
    double refresh_width{1.0};
    std::string output;
};

int cmd_simulate(SimulateOptions& o, std::ostream& out) {
    ModelManifest manifest;
    const auto model = load_model(o.model, manifest);
    std::vector<std::pair<std::string, EventSequence>> runs;
    if (!o.data.path.empty()) {
        const auto db = align_types(load_data(o.data), manifest);
        for (std::size_t s = 0; s < db.sequences.size(); ++s) {
            const auto& seq = db.sequences[s];
            if (!(o.t_end > seq.t_stop)) {
                throw CliError(kExitIncompatible, "--t-end " + csv::format_double(o.t_end) +
                                                      " does not exceed t_stop of sequence '" + db.idx2seq[s] + "'");
            }
            SimConfig sc;
            sc.t_begin = seq.t_stop;
            sc.t_end = o.t_end;
            sc.seed_sequence = seq;
            sc.seq_index = s;
            sc.max_events = o.max_events;
            sc.rng_seed = derive_seed(o.seed, s);
            sc.bound_refresh_width = o.refresh_width;
            runs.emplace_back(db.idx2seq[s], simulate(model, sc));
        }
    } else {
        for (std::size_t s = 0; s < o.sequences; ++s) {
            SimConfig sc;
            sc.t_begin = o.t_begin;
            sc.t_end = o.t_end;
            sc.max_events = o.max_events;
            sc.rng_seed = derive_seed(o.seed, s);
            sc.bound_refresh_width = o.refresh_width;
            runs.emplace_back("sim-" + std::to_string(s + 1), simulate(model, sc));
        }
    }
    const std::string path = default_output(o.output, "simulated.csv");
    ensure_parent(path);
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write '" + path + "'");
    csv::write_row(file, {"id", "time", "event"});
    std::size_t events = 0;
    for (const auto& [id, seq] : runs) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            csv::write_row(file, {id, csv::format_double(seq.times[i]), manifest.type_names[seq.events[i]]});
        }
        events += seq.size();
    }
    if (!file) throw std::runtime_error("failed writing '" + path + "'");
    out << json{{"output", path}, {"sequences", runs.size()}, {"events", events}}.dump() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- predict

struct PredictOptions {
    std::string model;
    DataOptions data;
    double t0{0.0};
    double t1{0.0};
    PredictConfig cfg;
    bool with_errors{false};
    std::string output;
};

int cmd_predict(PredictOptions& o, std::ostream& out) {
    ModelManifest manifest;
    const auto model = load_model(o.model, manifest);
    const auto db = align_types(load_data(o.data), manifest);
    Prediction pred;
    try {
        pred = predict(model, db, o.t0, o.t1, o.cfg);
    } catch (const PredictPreconditionError& e) {
        throw CliError(kExitIncompatible, e.what());
    }
    const std::string path = default_output(o.output, "predicted.csv");
    ensure_parent(path);
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write '" + path + "'");
    std::vector<std::string> row{"id"};
    for (const auto& n : manifest.type_names) row.push_back(n);
    if (o.with_errors) {
        for (const auto& n : manifest.type_names) row.push_back(n + "_stderr");
    }
    csv::write_row(file, row);
    for (std::size_t s = 0; s < db.sequences.size(); ++s) {
        row.assign(1, db.idx2seq[s]);
        for (double v : pred.mean[s]) row.push_back(csv::format_double(v));
        if (o.with_errors) {
            for (double v : pred.std_error[s]) row.push_back(csv::format_double(v));
        }
        csv::write_row(file, row);
    }
    if (!file) throw std::runtime_error("failed writing '" + path + "'");
    out << json{{"output", path}, {"sequences", db.sequences.size()}, {"replicates", o.cfg.replicates}}.dump() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- exports

struct ExportOptions {
    std::string model;
    std::string csv;
    std::string svg;
};

int cmd_export_causality(ExportOptions& o, std::ostream& out) {
    ModelManifest manifest;
    const auto model = load_model(o.model, manifest);
    const auto matrix = infectivity_matrix(model);
    const std::string csv_path = default_output(o.csv, "causality.csv");
    const std::string svg_path = default_output(o.svg, "causality.svg");
    ensure_parent(csv_path);
    ensure_parent(svg_path);
    write_text_file(csv_path, matrix_csv(manifest.type_names, matrix));
    write_text_file(svg_path, heatmap_svg(manifest.type_names, matrix));
    out << json{{"csv", csv_path}, {"svg", svg_path}}.dump() << '\n';
    return kExitOk;
}

int cmd_export_exogenous(ExportOptions& o, std::ostream& out) {
    ModelManifest manifest;
    const auto model = load_model(o.model, manifest);
    const auto rates = exogenous_rates(model);
    const std::string csv_path = default_output(o.csv, "exogenous.csv");
    const std::string svg_path = default_output(o.svg, "exogenous.svg");
    ensure_parent(csv_path);
    ensure_parent(svg_path);
    write_text_file(csv_path, vector_csv(manifest.type_names, rates, "exogenous"));
    write_text_file(svg_path, bar_chart_svg(manifest.type_names, rates));
    out << json{{"csv", csv_path}, {"svg", svg_path}}.dump() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- inspect

std::string describe(const Activation& a) {
    std::string s = to_string(a.kind);
    if (a.kind == ActivationKind::Softplus) {
        std::ostringstream b;
        b << "(beta=" << a.beta << (a.printed_softplus ? ", sign-flipped" : "") << ")";
        s += b.str();
    }
    return s;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
    const auto m = load_manifest(path);
    const auto& c = m.composition;
    out << "manifest       " << path << " (format " << m.format_version << ")\n";
    out << "types          " << m.dims.num_types << ":";
    for (const auto& n : m.type_names) out << ' ' << n;
    out << '\n';
    out << "exogenous      " << to_string(c.exogenous) << " / " << describe(c.exogenous_activation) << '\n';
    out << "impact         " << to_string(c.impact) << " / " << describe(c.impact_activation) << '\n';
    out << "kernel         " << to_string(c.kernels.kind()) << " x" << c.kernels.size() << '\n';
    out << "outer          " << describe(c.outer) << '\n';
    out << "memory size    " << c.memory_size << ", quadrature nodes " << c.quadrature_nodes << '\n';
    out << "features       sequence " << m.dims.seq_feature_dim << ", event "
        << (m.dims.event_features ? m.dims.event_features->rows : 0) << '\n';
    out << "provenance     seed " << m.provenance.seed;
    if (!m.provenance.preset.empty()) out << ", preset " << m.provenance.preset;
    if (!m.provenance.loss.empty()) out << ", loss " << m.provenance.loss;
    out << "\n               config " << m.provenance.config_hash << '\n';
    out << "parameters\n";
    for (const auto& p : m.parameters) {
        std::string shape;
        for (auto d : p.shape) shape += (shape.empty() ? "" : "x") + std::to_string(d);
        double lo = 0.0, hi = 0.0;
        if (!p.values.empty()) {
            lo = *std::min_element(p.values.begin(), p.values.end());
            hi = *std::max_element(p.values.begin(), p.values.end());
        }
        out << "  " << std::left << std::setw(22) << p.name << std::setw(10) << shape
            << (p.trainable ? "trainable " : "fixed     ") << "range [" << lo << ", " << hi << "]\n";
    }
    return kExitOk;
}

void report_error(std::ostream& err, const std::string& command, int code, const std::string& message) {
    json j = {{"error", message}, {"exit_code", code}};
    if (!command.empty()) j["command"] = command;
    err << j.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Composable multivariate point process toolkit", "ppkit"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string config_path;
    auto with_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON file of option defaults; command-line flags take precedence");
        return sub;
    };

    FitOptions fit_opts;
    auto* fit_cmd = with_config(app.add_subcommand("fit", "Fit a model and write a manifest and report"));
    register_fit(*fit_cmd, fit_opts);

    ValidateOptions val_opts;
    auto* val_cmd = with_config(app.add_subcommand("validate", "Average loss of a model on a corpus"));
    val_cmd->add_option("-m,--model", val_opts.model, "Manifest")->required();
    val_cmd->add_option("data", val_opts.data.path, "Event CSV")->required();
    add_mapping_options(val_cmd, val_opts.data);
    val_cmd->add_option("--loss", val_opts.loss, "mle, lse or ce (default: the training loss)");
    val_cmd->add_option("--threads", val_opts.threads)->capture_default_str();

    SimulateOptions sim_opts;
    auto* sim_cmd = with_config(app.add_subcommand("simulate", "Sample sequences by thinning"));
    sim_cmd->add_option("-m,--model", sim_opts.model, "Manifest")->required();
    sim_cmd->add_option("--data", sim_opts.data.path, "Observed sequences to continue");
    add_mapping_options(sim_cmd, sim_opts.data);
    sim_cmd->add_option("--sequences", sim_opts.sequences, "Sequences to sample from scratch")->capture_default_str();
    sim_cmd->add_option("--t-begin", sim_opts.t_begin)->capture_default_str();
    sim_cmd->add_option("--t-end", sim_opts.t_end)->capture_default_str();
    sim_cmd->add_option("--max-events", sim_opts.max_events, "Cap per sequence")->capture_default_str();
    sim_cmd->add_option("--seed", sim_opts.seed)->capture_default_str();
    sim_cmd->add_option("--refresh-width", sim_opts.refresh_width, "Envelope refresh window")->capture_default_str();
    sim_cmd->add_option("-o,--output", sim_opts.output, "CSV path (default: $PPKIT_OUTPUT_DIR/simulated.csv)");

    PredictOptions pred_opts;
    auto* pred_cmd = with_config(app.add_subcommand("predict", "Monte-Carlo expected counts in a future window"));
    pred_cmd->add_option("-m,--model", pred_opts.model, "Manifest")->required();
    pred_cmd->add_option("data", pred_opts.data.path, "Event CSV")->required();
    add_mapping_options(pred_cmd, pred_opts.data);
    pred_cmd->add_option("--t0", pred_opts.t0, "Window start")->required();
    pred_cmd->add_option("--t1", pred_opts.t1, "Window end")->required();
    pred_cmd->add_option("--replicates", pred_opts.cfg.replicates)->capture_default_str();
    pred_cmd->add_option("--seed", pred_opts.cfg.rng_seed)->capture_default_str();
    pred_cmd->add_option("--refresh-width", pred_opts.cfg.bound_refresh_width)->capture_default_str();
    pred_cmd->add_option("--max-events", pred_opts.cfg.max_events)->capture_default_str();
    pred_cmd->add_option("--threads", pred_opts.cfg.threads)->capture_default_str();
    pred_cmd->add_flag("--with-errors", pred_opts.with_errors, "Add standard-error columns");
    pred_cmd->add_option("-o,--output", pred_opts.output, "CSV path (default: $PPKIT_OUTPUT_DIR/predicted.csv)");

    ExportOptions cause_opts;
    auto* cause_cmd = with_config(app.add_subcommand("export-causality", "Infectivity matrix as CSV and SVG heatmap"));
    cause_cmd->add_option("-m,--model", cause_opts.model, "Manifest")->required();
    cause_cmd->add_option("--csv", cause_opts.csv, "CSV path (default: $PPKIT_OUTPUT_DIR/causality.csv)");
    cause_cmd->add_option("--svg", cause_opts.svg, "SVG path (default: $PPKIT_OUTPUT_DIR/causality.svg)");

    ExportOptions exo_opts;
    auto* exo_cmd = with_config(app.add_subcommand("export-exogenous", "Base rates as CSV and SVG bar chart"));
    exo_cmd->add_option("-m,--model", exo_opts.model, "Manifest")->required();
    exo_cmd->add_option("--csv", exo_opts.csv, "CSV path (default: $PPKIT_OUTPUT_DIR/exogenous.csv)");
    exo_cmd->add_option("--svg", exo_opts.svg, "SVG path (default: $PPKIT_OUTPUT_DIR/exogenous.svg)");

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a manifest");
    inspect_cmd->add_option("model", inspect_path, "Manifest")->required();

    std::string command;
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        for (auto* sub : app.get_subcommands()) command = sub->get_name();
        report_error(err, command, kExitUsage, e.what());
        return kExitUsage;
    }

    command = app.get_subcommands().front()->get_name();
    try {
        if (!config_path.empty()) apply_config(*app.get_subcommands().front(), config_path);
        if (fit_cmd->parsed()) return cmd_fit(fit_opts, out);
        if (val_cmd->parsed()) return cmd_validate(val_opts, out);
        if (sim_cmd->parsed()) return cmd_simulate(sim_opts, out);
        if (pred_cmd->parsed()) return cmd_predict(pred_opts, out);
        if (cause_cmd->parsed()) return cmd_export_causality(cause_opts, out);
        if (exo_cmd->parsed()) return cmd_export_exogenous(exo_opts, out);
        if (inspect_cmd->parsed()) return cmd_inspect(inspect_path, out);
    } catch (const CliError& e) {
        report_error(err, command, e.exit_code, e.what());
        return e.exit_code;
    } catch (const std::exception& e) {
        report_error(err, command, kExitFailure, e.what());
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace ppkit
