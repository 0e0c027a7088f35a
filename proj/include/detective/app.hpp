#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "detective/models/classifier.hpp"
#include "detective/textgen.hpp"

namespace detective::app {

struct ServiceSettings {
  std::string bind_address = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";
  std::filesystem::path model;  // model file served by /classify
};

/// Loaded from one JSON file. Relative paths are resolved against the
/// file's directory; the API key itself only ever comes from the
/// environment variable named in generation.api_key_env.
struct AppConfig {
  std::filesystem::path corpus_manifest;
  std::filesystem::path datasets_dir = "datasets";
  std::filesystem::path models_dir = "models";
  std::filesystem::path results_dir = "results";
  std::filesystem::path quiz_dir = "quizzes";
  textgen::GenConfig generation;
  ServiceSettings service;
  std::uint64_t seed = 42;
};

AppConfig app_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
AppConfig load_app_config(const std::filesystem::path& path);

inline constexpr std::size_t kMinRegimeChars = 300;
inline constexpr std::size_t kMaxRegimeChars = 1200;

struct ClassifyResponse {
  Label label = Label::Human;
  double score_ai = 0.0;
  std::string model_id;
  std::string model_kind;
  std::size_t excerpt_char_len = 0;
  std::optional<std::string> warning;
};

nlohmann::json to_json(const ClassifyResponse& r);

/// A model ready to serve, named by its file stem.
struct LoadedModel {
  std::string model_id;
  models::TextModel model;
};

LoadedModel load_served_model(const std::filesystem::path& path);

/// Throws InvalidArgument for blank text.
ClassifyResponse classify_text(const LoadedModel& model, std::string_view text);

/// "ai p=0.97"
std::string verdict_line(const ClassifyResponse& r);

}  // namespace detective::app
