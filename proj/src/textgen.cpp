#include "detective/textgen.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "detective/corpus.hpp"
#include "detective/error.hpp"
#include "detective/random.hpp"
#include "detective/text_util.hpp"

namespace detective::textgen {

using nlohmann::json;

const std::string_view kRewritePrompt =
    "You will take the role of an author of crime novels. A text excerpt will be provided, you have to review it "
    "for number of space characters and key details. Create a new text excerpt which contains the same key details "
    "but appears structurally different to the original. The new text must have approximately the same number of "
    "spaces as the original. Only return the new text passage. Do not include place holders, line breaks or any "
    "other text except the new passage. Text excerpt:";

const std::string_view kStoryPrompt = "please write a story about a detective in the style of agatha christie";

GenConfig gen_config_from_json(const json& j) {
  GenConfig c;
  try {
    c.model_id = j.value("model_id", c.model_id);
    c.temperature = j.value("temperature", c.temperature);
    c.prompt = j.value("prompt", c.prompt);
    c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.requests_per_minute = j.value("requests_per_minute", c.requests_per_minute);
    c.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", c.initial_backoff.count()));
    c.timeout = std::chrono::seconds(j.value("timeout_s", c.timeout.count()));
    c.max_prompt_only_requests = j.value("max_prompt_only_requests", c.max_prompt_only_requests);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("generation config: ") + e.what());
  }
  if (!(c.temperature >= 0.0 && c.temperature <= 2.0)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be in [0, 2]");
  }
  if (c.max_retries < 0) throw Error(ErrorCode::InvalidArgument, "max_retries must be >= 0");
  return c;
}

json to_json(const GenConfig& c) {
  return {{"model_id", c.model_id},
          {"temperature", c.temperature},
          {"prompt", c.prompt},
          {"endpoint_url", c.endpoint_url},
          {"api_key_env", c.api_key_env},
          {"max_retries", c.max_retries},
          {"requests_per_minute", c.requests_per_minute},
          {"initial_backoff_ms", c.initial_backoff.count()},
          {"timeout_s", c.timeout.count()},
          {"max_prompt_only_requests", c.max_prompt_only_requests}};
}

std::string request_body(const GenConfig& cfg, std::string_view content) {
  json body;
  body["model"] = cfg.model_id;
  body["temperature"] = cfg.temperature;
  body["messages"] = json::array({{{"role", "user"}, {"content", std::string(content)}}});
  return body.dump();
}

std::string rewrite_content(const GenConfig& cfg, std::string_view excerpt_text) {
  std::string out = cfg.prompt;
  out += ' ';
  out += excerpt_text;
  return out;
}

std::string request_key(std::string_view body) { return sha256_hex(body); }

// ---- transports -------------------------------------------------------------

HttpTransport::HttpTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

HttpResponse HttpTransport::post(const std::string& url, const std::string& body, const std::string& api_key) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) return {0, httplib::to_string(res.error())};
  return {res->status, res->body};
}

FixtureStore FixtureStore::load(const std::filesystem::path& path) {
  auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::Parse, path.string() + " is not a JSON object");
  FixtureStore store;
  for (const auto& [key, value] : j.items()) {
    auto& list = store.responses_[key];
    if (value.is_string()) {
      list.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      for (const auto& v : value) list.push_back(v.get<std::string>());
    } else {
      throw Error(ErrorCode::Parse, path.string() + ": fixture values must be strings or arrays of strings");
    }
  }
  return store;
}

void FixtureStore::save(const std::filesystem::path& path) const {
  std::lock_guard lock(mutex_);
  json j = json::object();
  for (const auto& [key, list] : responses_) {
    j[key] = list.size() == 1 ? json(list.front()) : json(list);
  }
  write_file_atomic(path, j.dump(2) + "\n");
}

void FixtureStore::add(std::string_view body, std::string response) {
  std::lock_guard lock(mutex_);
  responses_[request_key(body)].push_back(std::move(response));
}

std::optional<std::string> FixtureStore::next(std::string_view body) {
  std::lock_guard lock(mutex_);
  const auto key = request_key(body);
  auto it = responses_.find(key);
  if (it == responses_.end()) return std::nullopt;
  auto& pos = cursor_[key];
  if (pos >= it->second.size()) return std::nullopt;
  return it->second[pos++];
}

std::size_t FixtureStore::size() const {
  std::lock_guard lock(mutex_);
  return responses_.size();
}

std::string completion_body(std::string_view content) {
  json j;
  j["choices"] = json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", std::string(content)}}}}});
  return j.dump();
}

HttpResponse ReplayTransport::post(const std::string&, const std::string& body, const std::string&) {
  auto reply = store_->next(body);
  if (!reply) {
    throw Error(ErrorCode::TransportError, "replay mode has no fixture for request " + request_key(body));
  }
  return {200, completion_body(*reply)};
}

HttpResponse RecordingTransport::post(const std::string& url, const std::string& body, const std::string& api_key) {
  auto res = inner_->post(url, body, api_key);
  if (res.status == 200) {
    auto j = json::parse(res.body, nullptr, false);
    if (!j.is_discarded()) {
      try {
        store_->add(body, j.at("choices").at(0).at("message").at("content").get<std::string>());
      } catch (const json::exception&) {
      }
    }
  }
  return res;
}

// ---- response handling ------------------------------------------------------

namespace {

bool strip_pair(std::string_view& s, std::string_view open, std::string_view close) {
  if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
    s.remove_prefix(open.size());
    s.remove_suffix(close.size());
    return true;
  }
  return false;
}

}  // namespace

std::string clean_response(std::string_view raw) {
  auto s = trim(raw);
  if (strip_pair(s, "\"", "\"") || strip_pair(s, "'", "'") || strip_pair(s, "“", "”") ||
      strip_pair(s, "‘", "’")) {
    s = trim(s);
  }
  if (s.empty()) throw Error(ErrorCode::RefusalOrEmpty, "empty response");
  const auto open = s.find('[');
  if (open != std::string_view::npos && s.find(']', open) != std::string_view::npos) {
    throw Error(ErrorCode::RefusalOrEmpty, "response contains a placeholder");
  }
  return std::string(s);
}

ChatClient::ChatClient(GenConfig cfg, std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
  if (!transport_) throw Error(ErrorCode::InvalidArgument, "ChatClient needs a transport");
}

std::size_t ChatClient::attempts() const {
  std::lock_guard lock(mutex_);
  return attempts_;
}

void ChatClient::wait_for_slot() {
  std::unique_lock lock(mutex_);
  ++attempts_;
  if (cfg_.requests_per_minute <= 0) return;
  const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(60.0 / cfg_.requests_per_minute));
  auto now = std::chrono::steady_clock::now();
  if (last_request_ && now < *last_request_ + interval) {
    const auto when = *last_request_ + interval;
    last_request_ = when;  // reserve the slot before sleeping
    lock.unlock();
    std::this_thread::sleep_until(when);
    return;
  }
  last_request_ = now;
}

std::string ChatClient::complete(std::string_view content) {
  const auto body = request_body(cfg_, content);
  std::string api_key;
  if (transport_->needs_api_key()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorCode::AuthError, "environment variable " + cfg_.api_key_env + " is not set");
    }
    api_key = key;
  }
  auto backoff = cfg_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    wait_for_slot();
    const auto res = transport_->post(cfg_.endpoint_url, body, api_key);
    if (res.status == 200) {
      auto j = json::parse(res.body, nullptr, false);
      try {
        if (j.is_discarded()) throw Error(ErrorCode::TransportError, "response is not JSON");
        const auto& content_json = j.at("choices").at(0).at("message").at("content");
        return content_json.is_null() ? std::string{} : content_json.get<std::string>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::TransportError, std::string("unexpected response shape: ") + e.what());
      }
    }
    if (res.status == 401 || res.status == 403) {
      throw Error(ErrorCode::AuthError, "endpoint rejected credentials (HTTP " + std::to_string(res.status) + ")");
    }
    const bool retryable = res.status == 0 || res.status == 408 || res.status == 429 || res.status >= 500;
    const std::string what =
        res.status == 0 ? "connection failed: " + res.body : "HTTP " + std::to_string(res.status);
    if (!retryable) throw Error(ErrorCode::TransportError, what);
    if (attempt >= cfg_.max_retries) {
      throw Error(ErrorCode::TransportError, what + " after " + std::to_string(attempt + 1) + " attempts");
    }
    std::this_thread::sleep_for(backoff);
    backoff = std::min<std::chrono::milliseconds>(backoff * 2, std::chrono::milliseconds{60'000});
  }
}

Excerpt rewrite_excerpt(ChatClient& client, const Excerpt& ex) {
  if (ex.label != Label::Human) {
    throw Error(ErrorCode::InvalidArgument, "only human excerpts can be rewritten: " + ex.excerpt_id);
  }
  auto text = clean_response(client.complete(rewrite_content(client.config(), ex.text)));
  return make_excerpt(ex.excerpt_id + "-rw", std::move(text), Origin::Rewrite, ex.excerpt_id);
}

namespace {

// Chunks of a story; stories without a full stop contribute nothing.
std::vector<std::string> story_chunks(std::string_view story, std::size_t target_words) {
  std::vector<std::string> out;
  try {
    for (auto& ex : corpus::chunk_text("story", story, target_words)) out.push_back(std::move(ex.text));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoSentences) throw;
  }
  return out;
}

std::string numbered_id(std::string_view prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "-%05zu", n);
  return std::string(prefix) + buf;
}

}  // namespace

std::vector<Excerpt> generate_prompt_only(ChatClient& client, std::string_view prompt, std::size_t n_excerpts,
                                          std::size_t target_words, std::string_view id_prefix) {
  if (n_excerpts == 0) throw Error(ErrorCode::InvalidArgument, "n_excerpts must be >= 1");
  std::vector<Excerpt> out;
  const int cap = client.config().max_prompt_only_requests;
  for (int request = 0; request < cap && out.size() < n_excerpts; ++request) {
    std::string story;
    try {
      story = clean_response(client.complete(prompt));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RefusalOrEmpty) throw;
      continue;
    }
    for (auto& chunk : story_chunks(story, target_words)) {
      if (out.size() == n_excerpts) break;
      out.push_back(make_excerpt(numbered_id(id_prefix, out.size() + 1), std::move(chunk), Origin::PromptOnly));
    }
  }
  if (out.size() < n_excerpts) {
    throw Error(ErrorCode::InsufficientOutput, std::to_string(cap) + " requests yielded " +
                                                   std::to_string(out.size()) + " of " +
                                                   std::to_string(n_excerpts) + " excerpts");
  }
  return out;
}

// ---- jobs -------------------------------------------------------------------

std::string_view to_string(JobMode mode) noexcept { return mode == JobMode::Rewrite ? "rewrite" : "prompt_only"; }

std::string_view to_string(ItemState state) noexcept {
  switch (state) {
    case ItemState::Pending: return "pending";
    case ItemState::Done: return "done";
    case ItemState::Failed: return "failed";
  }
  return "unknown";
}

namespace {

JobMode parse_job_mode(std::string_view s) {
  if (s == "rewrite") return JobMode::Rewrite;
  if (s == "prompt_only") return JobMode::PromptOnly;
  throw Error(ErrorCode::Parse, "unknown job mode '" + std::string(s) + "'");
}

ItemState parse_item_state(std::string_view s) {
  if (s == "pending") return ItemState::Pending;
  if (s == "done") return ItemState::Done;
  if (s == "failed") return ItemState::Failed;
  throw Error(ErrorCode::Parse, "unknown item state '" + std::string(s) + "'");
}

std::string slot_name(std::size_t i) { return numbered_id("request", i + 1); }

}  // namespace

std::size_t GenJob::count(ItemState state) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [&](const JobItem& it) { return it.state == state; }));
}

GenJob make_rewrite_job(std::string job_id, std::vector<std::string> input_ids, std::uint64_t order_seed) {
  GenJob job;
  job.job_id = std::move(job_id);
  job.mode = JobMode::Rewrite;
  job.order_seed = order_seed;
  Rng rng(order_seed);
  rng.shuffle(input_ids);
  for (auto& id : input_ids) job.items.push_back({std::move(id), ItemState::Pending, {}, {}});
  return job;
}

GenJob make_prompt_only_job(std::string job_id, std::size_t target_count, std::uint64_t order_seed,
                            std::string prompt, std::size_t target_words) {
  if (target_count == 0) throw Error(ErrorCode::InvalidArgument, "target_count must be >= 1");
  GenJob job;
  job.job_id = std::move(job_id);
  job.mode = JobMode::PromptOnly;
  job.order_seed = order_seed;
  job.target_count = target_count;
  job.prompt = std::move(prompt);
  job.target_words = target_words;
  // One story usually yields several excerpts; more slots are added on demand.
  job.items.push_back({slot_name(0), ItemState::Pending, {}, {}});
  return job;
}

json to_json(const GenJob& job) {
  json items = json::array();
  for (const auto& it : job.items) {
    json j{{"input_id", it.input_id}, {"state", std::string(to_string(it.state))}};
    if (it.state == ItemState::Done) j["response"] = it.response;
    if (!it.error.empty()) j["error"] = it.error;
    items.push_back(std::move(j));
  }
  json j{{"job_id", job.job_id},
         {"mode", std::string(to_string(job.mode))},
         {"order_seed", job.order_seed},
         {"items", items}};
  if (job.mode == JobMode::PromptOnly) {
    j["target_count"] = job.target_count;
    j["prompt"] = job.prompt;
    j["target_words"] = job.target_words;
  }
  return j;
}

GenJob gen_job_from_json(const json& j) {
  try {
    GenJob job;
    job.job_id = j.at("job_id").get<std::string>();
    job.mode = parse_job_mode(j.at("mode").get<std::string>());
    job.order_seed = j.at("order_seed").get<std::uint64_t>();
    job.target_count = j.value("target_count", std::size_t{0});
    job.prompt = j.value("prompt", std::string{});
    job.target_words = j.value("target_words", std::size_t{100});
    for (const auto& it : j.at("items")) {
      JobItem item;
      item.input_id = it.at("input_id").get<std::string>();
      item.state = parse_item_state(it.at("state").get<std::string>());
      item.response = it.value("response", std::string{});
      item.error = it.value("error", std::string{});
      job.items.push_back(std::move(item));
    }
    return job;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("job file: ") + e.what());
  }
}

void save_job(const std::filesystem::path& path, const GenJob& job) {
  write_file_atomic(path, to_json(job).dump(2) + "\n");
}

GenJob load_job(const std::filesystem::path& path) {
  auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Parse, path.string() + " is not valid JSON");
  return gen_job_from_json(j);
}

std::vector<Excerpt> job_excerpts(const GenJob& job) {
  std::vector<Excerpt> out;
  if (job.mode == JobMode::Rewrite) {
    for (const auto& it : job.items) {
      if (it.state != ItemState::Done) continue;
      out.push_back(make_excerpt(it.input_id + "-rw", it.response, Origin::Rewrite, it.input_id));
    }
    return out;
  }
  for (const auto& it : job.items) {
    if (it.state != ItemState::Done) continue;
    for (auto& chunk : story_chunks(it.response, job.target_words)) {
      if (out.size() == job.target_count) return out;
      out.push_back(make_excerpt(numbered_id(job.job_id, out.size() + 1), std::move(chunk), Origin::PromptOnly));
    }
  }
  return out;
}

std::vector<Excerpt> run_generation_job(GenJob& job, ChatClient& client, const std::vector<Excerpt>& inputs,
                                        const std::filesystem::path& job_path, const JobRunOptions& options) {
  std::unordered_map<std::string, const Excerpt*> by_id;
  for (const auto& ex : inputs) by_id.emplace(ex.excerpt_id, &ex);

  std::mutex mutex;  // guards job, counters and the job file
  std::size_t next_item = 0;
  std::size_t issued = 0;
  std::size_t excerpts_so_far = job_excerpts(job).size();
  std::optional<Error> fatal;

  auto persist = [&] {
    if (!job_path.empty()) save_job(job_path, job);
  };

  // Claims the next pending item, growing prompt_only jobs while they are short.
  auto claim = [&]() -> std::optional<std::size_t> {
    std::lock_guard lock(mutex);
    if (fatal) return std::nullopt;
    if (options.stop_after && issued >= *options.stop_after) return std::nullopt;
    while (next_item < job.items.size() && job.items[next_item].state != ItemState::Pending) ++next_item;
    if (next_item == job.items.size() && job.mode == JobMode::PromptOnly && excerpts_so_far < job.target_count &&
        job.items.size() < static_cast<std::size_t>(client.config().max_prompt_only_requests)) {
      job.items.push_back({slot_name(job.items.size()), ItemState::Pending, {}, {}});
    }
    if (next_item == job.items.size()) return std::nullopt;
    ++issued;
    return next_item++;
  };

  auto worker = [&] {
    while (auto index = claim()) {
      std::string content;
      std::string input_id;
      {
        std::lock_guard lock(mutex);
        input_id = job.items[*index].input_id;
      }
      ItemState state = ItemState::Done;
      std::string response, error;
      if (job.mode == JobMode::Rewrite) {
        auto it = by_id.find(input_id);
        if (it == by_id.end()) {
          state = ItemState::Failed;
          error = "input excerpt not found";
        } else if (it->second->label != Label::Human) {
          state = ItemState::Failed;
          error = "input excerpt is not human-written";
        } else {
          content = rewrite_content(client.config(), it->second->text);
        }
      } else {
        content = job.prompt;
      }
      if (state == ItemState::Done) {
        try {
          response = clean_response(client.complete(content));
        } catch (const Error& e) {
          if (e.code() == ErrorCode::AuthError) {
            std::lock_guard lock(mutex);
            if (!fatal) fatal = e;
            return;
          }
          state = ItemState::Failed;
          error = e.what();
        }
      }
      std::lock_guard lock(mutex);
      auto& item = job.items[*index];
      item.state = state;
      item.response = std::move(response);
      item.error = std::move(error);
      if (job.mode == JobMode::PromptOnly && state == ItemState::Done) {
        excerpts_so_far += story_chunks(item.response, job.target_words).size();
      }
      persist();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  persist();
  if (fatal) throw *fatal;
  return job_excerpts(job);
}

}  // namespace detective::textgen
