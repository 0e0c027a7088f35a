#include "detective/app.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "detective/error.hpp"
#include "detective/models/model_io.hpp"
#include "detective/text_util.hpp"

namespace detective::app {

using nlohmann::json;

AppConfig app_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "config must be a JSON object");
  auto resolve = [&](const std::filesystem::path& p) { return p.empty() || p.is_absolute() ? p : base_dir / p; };
  AppConfig c;
  try {
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      c.corpus_manifest = p.value("corpus_manifest", c.corpus_manifest.string());
      c.datasets_dir = p.value("datasets_dir", c.datasets_dir.string());
      c.models_dir = p.value("models_dir", c.models_dir.string());
      c.results_dir = p.value("results_dir", c.results_dir.string());
      c.quiz_dir = p.value("quiz_dir", c.quiz_dir.string());
    }
    if (j.contains("generation")) c.generation = textgen::gen_config_from_json(j.at("generation"));
    if (j.contains("service")) {
      const auto& s = j.at("service");
      c.service.bind_address = s.value("bind_address", c.service.bind_address);
      c.service.port = s.value("port", c.service.port);
      c.service.cors_origin = s.value("cors_origin", c.service.cors_origin);
      c.service.model = s.value("model", std::string{});
    }
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  c.corpus_manifest = resolve(c.corpus_manifest);
  c.datasets_dir = resolve(c.datasets_dir);
  c.models_dir = resolve(c.models_dir);
  c.results_dir = resolve(c.results_dir);
  c.quiz_dir = resolve(c.quiz_dir);
  c.service.model = resolve(c.service.model);
  if (c.service.port < 0 || c.service.port > 65535) throw Error(ErrorCode::InvalidArgument, "service.port out of range");
  if (!c.corpus_manifest.empty() && !std::filesystem::exists(c.corpus_manifest)) {
    throw Error(ErrorCode::Io, "corpus manifest not found: " + c.corpus_manifest.string());
  }
  return c;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Parse, path.string() + " is not valid JSON");
  return app_config_from_json(j, path.parent_path());
}

json to_json(const ClassifyResponse& r) {
  json j{{"label", std::string(to_string(r.label))},
         {"score_ai", r.score_ai},
         {"model_id", r.model_id},
         {"model_kind", r.model_kind},
         {"excerpt_char_len", r.excerpt_char_len}};
  if (r.warning) j["warning"] = *r.warning;
  return j;
}

LoadedModel load_served_model(const std::filesystem::path& path) {
  return {path.stem().string(), models::load_model(path)};
}

ClassifyResponse classify_text(const LoadedModel& loaded, std::string_view text) {
  if (trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "text is empty");
  const auto p = loaded.model.classify(text);
  ClassifyResponse r;
  r.label = p.label;
  r.score_ai = p.score_ai;
  r.model_id = loaded.model_id;
  r.model_kind = std::string(models::to_string(loaded.model.kind()));
  r.excerpt_char_len = utf8_length(text);
  if (r.excerpt_char_len < kMinRegimeChars || r.excerpt_char_len > kMaxRegimeChars) {
    r.warning = "text is " + std::to_string(r.excerpt_char_len) + " characters; the model was trained on " +
                std::to_string(kMinRegimeChars) + "-" + std::to_string(kMaxRegimeChars) +
                " character excerpts, so this verdict is less reliable";
  }
  return r;
}

std::string verdict_line(const ClassifyResponse& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s p=%.2f", std::string(to_string(r.label)).c_str(), r.score_ai);
  return buf;
}

}  // namespace detective::app
