#pragma once

#include <filesystem>
#include <string>

#include "detective/models/classifier.hpp"

namespace detective::models {

inline constexpr int kModelFormatVersion = 1;

/// JSON envelope: {format_version, model_kind, created_at, vocab, params,
/// config, dataset_fingerprint, sha256}. Parameter arrays are base64 of
/// little-endian float64 with explicit shapes; sha256 covers the envelope
/// serialized without the sha256 field.
std::string serialize_model(const TextModel& model);
TextModel deserialize_model(const std::string& contents);

void save_model(const std::filesystem::path& path, const TextModel& model);

/// Throws VersionMismatch for an unknown format_version and CorruptFile for
/// a checksum mismatch or malformed payload.
TextModel load_model(const std::filesystem::path& path);

}  // namespace detective::models
