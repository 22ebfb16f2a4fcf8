#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppkit/model.hpp"

namespace ppkit {

inline constexpr int kManifestVersion = 1;

struct Provenance {
    std::uint64_t seed{0};
    /// Hex SHA-256 of the canonical training configuration.
    std::string config_hash;
    /// Loss the model was trained with ("mle", "lse", "ce"), if known.
    std::string loss;
    std::string preset;
};

/// Everything needed to rebuild a HawkesModel bit-exactly.
struct ModelManifest {
    int format_version{kManifestVersion};
    Composition composition;
    ModelDims dims;
    std::vector<std::string> type_names;
    Provenance provenance;
    /// Every parameter group of the model, in model order.
    std::vector<Parameter> parameters;
};

struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Composition choices of an existing model.
Composition composition_of(const HawkesModel& model);

ModelManifest make_manifest(const HawkesModel& model, const ModelDims& dims, std::vector<std::string> type_names,
                            Provenance provenance);
/// Rebuilds the model and copies every stored array into it. Shape or name
/// mismatches raise ManifestError naming the array.
HawkesModel build_model(const ModelManifest& manifest);

std::string manifest_to_json(const ModelManifest& manifest);
ModelManifest manifest_from_json(const std::string& text);
void save_manifest(const ModelManifest& manifest, const std::string& path);
ModelManifest load_manifest(const std::string& path);

/// Little-endian IEEE-754 doubles, base64 encoded.
std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(const std::string& text);
/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(const std::string& data);

}  // namespace ppkit
