#include "detective/models/model_io.hpp"

#include <bit>
#include <chrono>
#include <cstdint>
#include <ctime>

#include <nlohmann/json.hpp>

#include "detective/error.hpp"
#include "detective/text_util.hpp"

namespace detective::models {

using nlohmann::json;

namespace {

json encode_array(const std::vector<double>& values, std::vector<std::size_t> shape) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 8);
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  return json{{"shape", shape}, {"data", base64_encode(bytes)}};
}

std::vector<double> decode_array(const json& j, const std::vector<std::size_t>& expected_shape) {
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  if (shape != expected_shape) throw Error(ErrorCode::CorruptFile, "parameter shape mismatch");
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  const auto bytes = base64_decode(j.at("data").get<std::string>());
  if (bytes.size() != n * 8) throw Error(ErrorCode::CorruptFile, "parameter payload has the wrong length");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json mlp_config_json(const MlpConfig& c) {
  return json{{"hidden_units", c.hidden_units}, {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
              {"beta2", c.beta2},               {"epsilon", c.epsilon},             {"l2", c.l2},
              {"batch_size", c.batch_size},     {"max_epochs", c.max_epochs},       {"tol", c.tol},
              {"n_iter_no_change", c.n_iter_no_change}, {"seed", c.seed}};
}

MlpConfig mlp_config_from_json(const json& j) {
  MlpConfig c;
  c.hidden_units = j.at("hidden_units").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.l2 = j.at("l2").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.tol = j.at("tol").get<double>();
  c.n_iter_no_change = j.at("n_iter_no_change").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string serialize_model(const TextModel& tm) {
  const std::size_t V = tm.vocab.size();
  json env;
  env["format_version"] = kModelFormatVersion;
  env["model_kind"] = std::string(to_string(tm.kind()));
  env["created_at"] = tm.created_at.empty() ? utc_now() : tm.created_at;
  env["vocab"] = tm.vocab.tokens();
  env["dataset_fingerprint"] = tm.dataset_fingerprint;
  if (const auto* nb = std::get_if<NBModel>(&tm.model)) {
    std::vector<double> ll(nb->log_likelihoods[0]);
    ll.insert(ll.end(), nb->log_likelihoods[1].begin(), nb->log_likelihoods[1].end());
    env["params"] = json{{"log_priors", encode_array({nb->log_priors[0], nb->log_priors[1]}, {2})},
                         {"log_likelihoods", encode_array(ll, {2, V})}};
    env["config"] = json{{"alpha", nb->alpha}};
  } else {
    const auto& m = std::get<MLPModel>(tm.model);
    env["params"] = json{{"w1", encode_array(m.w1, {m.n_features, m.hidden})},
                         {"b1", encode_array(m.b1, {m.hidden})},
                         {"w2", encode_array(m.w2, {m.hidden, 2})},
                         {"b2", encode_array(m.b2, {2})}};
    env["config"] = mlp_config_json(m.config);
    env["config"]["epochs_run"] = m.epochs_run;
  }
  env["sha256"] = sha256_hex(env.dump());
  return env.dump();
}

TextModel deserialize_model(const std::string& contents) {
  json env = json::parse(contents, nullptr, false);
  if (env.is_discarded() || !env.is_object()) throw Error(ErrorCode::CorruptFile, "model file is not a JSON object");
  try {
    const int version = env.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "model format_version " + std::to_string(version) +
                                                  ", expected " + std::to_string(kModelFormatVersion));
    }
    const auto stored = env.at("sha256").get<std::string>();
    env.erase("sha256");
    if (sha256_hex(env.dump()) != stored) throw Error(ErrorCode::CorruptFile, "checksum mismatch");

    TextModel tm;
    auto tokens = env.at("vocab").get<std::vector<std::string>>();
    tm.vocab = features::Vocabulary(tokens);
    if (tm.vocab.tokens() != tokens) throw Error(ErrorCode::CorruptFile, "vocabulary is not sorted and unique");
    tm.created_at = env.at("created_at").get<std::string>();
    tm.dataset_fingerprint = env.at("dataset_fingerprint").get<std::string>();
    const std::size_t V = tm.vocab.size();
    const auto kind = parse_model_kind(env.at("model_kind").get<std::string>());
    const auto& params = env.at("params");
    if (kind == ModelKind::NaiveBayes) {
      NBModel nb;
      nb.alpha = env.at("config").at("alpha").get<double>();
      const auto lp = decode_array(params.at("log_priors"), {2});
      nb.log_priors = {lp[0], lp[1]};
      const auto ll = decode_array(params.at("log_likelihoods"), {2, V});
      nb.log_likelihoods[0].assign(ll.begin(), ll.begin() + static_cast<std::ptrdiff_t>(V));
      nb.log_likelihoods[1].assign(ll.begin() + static_cast<std::ptrdiff_t>(V), ll.end());
      tm.model = std::move(nb);
    } else if (kind == ModelKind::Mlp) {
      MLPModel m;
      m.config = mlp_config_from_json(env.at("config"));
      m.epochs_run = env.at("config").value("epochs_run", 0);
      m.n_features = V;
      m.hidden = m.config.hidden_units;
      m.w1 = decode_array(params.at("w1"), {V, m.hidden});
      m.b1 = decode_array(params.at("b1"), {m.hidden});
      m.w2 = decode_array(params.at("w2"), {m.hidden, 2});
      m.b2 = decode_array(params.at("b2"), {2});
      tm.model = std::move(m);
    } else {
      throw Error(ErrorCode::CorruptFile, "unsupported model_kind");
    }
    return tm;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VersionMismatch || e.code() == ErrorCode::CorruptFile) throw;
    throw Error(ErrorCode::CorruptFile, e.what());
  }
}

void save_model(const std::filesystem::path& path, const TextModel& model) {
  write_file_atomic(path, serialize_model(model));
}

TextModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace detective::models
