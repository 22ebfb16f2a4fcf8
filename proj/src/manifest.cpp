#include "ppkit/manifest.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace ppkit {

using nlohmann::json;

namespace {

std::string role_name(ParamRole r) {
    switch (r) {
        case ParamRole::Exogenous: return "exogenous";
        case ParamRole::Impact: return "impact";
        case ParamRole::Kernel: return "kernel";
        case ParamRole::Embedding: return "embedding";
        case ParamRole::Data: return "data";
    }
    return "?";
}

ParamRole parse_role(const std::string& s) {
    if (s == "exogenous") return ParamRole::Exogenous;
    if (s == "impact") return ParamRole::Impact;
    if (s == "kernel") return ParamRole::Kernel;
    if (s == "embedding") return ParamRole::Embedding;
    if (s == "data") return ParamRole::Data;
    throw ManifestError("unknown parameter role '" + s + "'");
}

json activation_json(const Activation& a) {
    return {{"kind", to_string(a.kind)}, {"beta", a.beta}, {"printed_softplus", a.printed_softplus}};
}

Activation activation_from(const json& j) {
    Activation a;
    a.kind = parse_activation_kind(j.at("kind").get<std::string>());
    a.beta = j.at("beta").get<double>();
    a.printed_softplus = j.at("printed_softplus").get<bool>();
    a.validate();
    return a;
}

json array_json(const std::string& name, const std::vector<std::size_t>& shape, std::span<const double> values) {
    return {{"name", name}, {"shape", shape}, {"data", encode_doubles(values)}};
}

std::size_t shape_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

Parameter parameter_from(const json& j) {
    Parameter p(j.at("name").get<std::string>(), j.at("shape").get<std::vector<std::size_t>>(),
                parse_role(j.at("role").get<std::string>()), j.at("trainable").get<bool>());
    auto values = decode_doubles(j.at("data").get<std::string>());
    if (values.size() != shape_count(p.shape)) {
        throw ManifestError("array '" + p.name + "' holds " + std::to_string(values.size()) +
                            " values but its shape declares " + std::to_string(shape_count(p.shape)));
    }
    p.values = std::move(values);
    return p;
}

}  // namespace

std::string encode_doubles(std::span<const double> values) {
    std::string raw(values.size() * 8, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto bits = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) raw[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    std::string out(4 * ((raw.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(raw.data()), static_cast<int>(raw.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<double> decode_doubles(const std::string& text) {
    if (text.size() % 4 != 0) throw ManifestError("base64 payload has invalid length");
    std::string raw(text.size() / 4 * 3, '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(raw.data()),
                                  reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) throw ManifestError("invalid base64 payload");
    // DecodeBlock keeps the padding bytes; drop them.
    std::size_t len = static_cast<std::size_t>(n);
    if (!text.empty() && text.back() == '=') --len;
    if (text.size() > 1 && text[text.size() - 2] == '=') --len;
    if (len % 8 != 0) throw ManifestError("base64 payload is not a whole number of doubles");
    std::vector<double> out(len / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i * 8 + b])) << (8 * b);
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

Composition composition_of(const HawkesModel& model) {
    Composition c;
    c.exogenous = model.exogenous.kind();
    c.exogenous_activation = model.exogenous.activation();
    c.impact = model.impact.kind();
    c.impact_activation = model.impact.activation();
    c.kernels = model.kernels;
    c.outer = model.outer;
    c.memory_size = model.memory_size;
    c.quadrature_nodes = model.quadrature_nodes;
    return c;
}

ModelManifest make_manifest(const HawkesModel& model, const ModelDims& dims, std::vector<std::string> type_names,
                            Provenance provenance) {
    if (dims.num_types != model.num_types()) throw ManifestError("dims disagree with the model's type count");
    ModelManifest m;
    m.composition = composition_of(model);
    m.dims = dims;
    m.type_names = std::move(type_names);
    m.provenance = std::move(provenance);
    for (const auto* p : model.parameters()) m.parameters.push_back(*p);
    return m;
}

HawkesModel build_model(const ModelManifest& manifest) {
    HawkesModel model(manifest.composition, manifest.dims);
    auto params = model.parameters();
    if (params.size() != manifest.parameters.size()) {
        throw ManifestError("manifest stores " + std::to_string(manifest.parameters.size()) +
                            " parameter arrays but the composition defines " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& stored = manifest.parameters[i];
        if (stored.name != params[i]->name) {
            throw ManifestError("array '" + stored.name + "' found where '" + params[i]->name + "' was expected");
        }
        if (stored.shape != params[i]->shape || stored.values.size() != params[i]->size()) {
            throw ManifestError("array '" + stored.name + "' has the wrong shape");
        }
        params[i]->values = stored.values;
        params[i]->trainable = stored.trainable;
        params[i]->role = stored.role;
    }
    model.kernels.validate();
    return model;
}

std::string manifest_to_json(const ModelManifest& m) {
    json j;
    j["format_version"] = m.format_version;
    const auto& c = m.composition;
    json kernel_params = json::array();
    for (const auto& p : c.kernels.parameters()) {
        auto a = array_json(p.name, p.shape, p.values);
        a["role"] = role_name(p.role);
        a["trainable"] = p.trainable;
        kernel_params.push_back(a);
    }
    j["composition"] = {
        {"exogenous", {{"kind", to_string(c.exogenous)}, {"activation", activation_json(c.exogenous_activation)}}},
        {"impact", {{"kind", to_string(c.impact)}, {"activation", activation_json(c.impact_activation)}}},
        {"kernel", {{"kind", to_string(c.kernels.kind())}, {"basis", c.kernels.size()}, {"parameters", kernel_params}}},
        {"outer_activation", activation_json(c.outer)},
        {"memory_size", c.memory_size},
        {"quadrature_nodes", c.quadrature_nodes},
    };
    const auto& d = m.dims;
    json dims = {
        {"num_types", d.num_types},
        {"basis", c.kernels.size()},
        {"num_sequences", d.num_sequences},
        {"seq_feature_dim", d.seq_feature_dim},
        {"event_feature_dim", d.event_features ? d.event_features->rows : 0},
        {"embedding_dim", d.embedding_dim},
        {"latent_dim", d.latent_dim},
        {"hidden_dim", d.hidden_dim},
    };
    if (d.event_features) {
        dims["event_features"] =
            array_json("event_features", {d.event_features->rows, d.event_features->cols}, d.event_features->data);
    }
    j["dims"] = dims;
    j["type_names"] = m.type_names;
    j["provenance"] = {{"seed", m.provenance.seed},
                       {"config_hash", m.provenance.config_hash},
                       {"loss", m.provenance.loss},
                       {"preset", m.provenance.preset}};
    json params = json::array();
    for (const auto& p : m.parameters) {
        auto a = array_json(p.name, p.shape, p.values);
        a["role"] = role_name(p.role);
        a["trainable"] = p.trainable;
        params.push_back(a);
    }
    j["parameters"] = params;
    return j.dump(2);
}

ModelManifest manifest_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ManifestError(std::string("manifest parse error: ") + e.what());
    }
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kManifestVersion) {
            throw ManifestError("unsupported manifest format_version " + std::to_string(version) +
                                " (this build reads version " + std::to_string(kManifestVersion) + ")");
        }
        ModelManifest m;
        m.format_version = version;
        const auto& jc = j.at("composition");
        auto& c = m.composition;
        c.exogenous = parse_exogenous_kind(jc.at("exogenous").at("kind").get<std::string>());
        c.exogenous_activation = activation_from(jc.at("exogenous").at("activation"));
        c.impact = parse_impact_kind(jc.at("impact").at("kind").get<std::string>());
        c.impact_activation = activation_from(jc.at("impact").at("activation"));
        std::vector<Parameter> kernel_params;
        for (const auto& p : jc.at("kernel").at("parameters")) kernel_params.push_back(parameter_from(p));
        c.kernels = KernelBank::from_parameters(parse_kernel_kind(jc.at("kernel").at("kind").get<std::string>()),
                                                std::move(kernel_params));
        c.kernels.validate();
        c.outer = activation_from(jc.at("outer_activation"));
        c.memory_size = jc.at("memory_size").get<std::size_t>();
        c.quadrature_nodes = jc.at("quadrature_nodes").get<std::size_t>();

        const auto& jd = j.at("dims");
        auto& d = m.dims;
        d.num_types = jd.at("num_types").get<std::size_t>();
        d.num_sequences = jd.at("num_sequences").get<std::size_t>();
        d.seq_feature_dim = jd.at("seq_feature_dim").get<std::size_t>();
        d.embedding_dim = jd.at("embedding_dim").get<std::size_t>();
        d.latent_dim = jd.at("latent_dim").get<std::size_t>();
        d.hidden_dim = jd.at("hidden_dim").get<std::size_t>();
        if (jd.contains("event_features")) {
            const auto& je = jd.at("event_features");
            const auto shape = je.at("shape").get<std::vector<std::size_t>>();
            if (shape.size() != 2) throw ManifestError("array 'event_features' must be two-dimensional");
            FeatureMatrix f(shape[0], shape[1]);
            f.data = decode_doubles(je.at("data").get<std::string>());
            if (f.data.size() != shape[0] * shape[1]) throw ManifestError("array 'event_features' has the wrong length");
            d.event_features = std::move(f);
        }
        if (jd.at("basis").get<std::size_t>() != c.kernels.size()) {
            throw ManifestError("dims.basis disagrees with the kernel parameters");
        }

        m.type_names = j.at("type_names").get<std::vector<std::string>>();
        if (m.type_names.size() != d.num_types) throw ManifestError("type_names length differs from num_types");
        const auto& jp = j.at("provenance");
        m.provenance.seed = jp.at("seed").get<std::uint64_t>();
        m.provenance.config_hash = jp.at("config_hash").get<std::string>();
        m.provenance.loss = jp.value("loss", "");
        m.provenance.preset = jp.value("preset", "");
        for (const auto& p : j.at("parameters")) m.parameters.push_back(parameter_from(p));
        return m;
    } catch (const json::exception& e) {
        throw ManifestError(std::string("malformed manifest: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ManifestError(std::string("malformed manifest: ") + e.what());
    }
}

void save_manifest(const ModelManifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << manifest_to_json(manifest) << '\n';
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

ModelManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return manifest_from_json(buf.str());
}

}  // namespace ppkit
