#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "detective/excerpt.hpp"

namespace detective::textgen {

extern const std::string_view kRewritePrompt;
extern const std::string_view kStoryPrompt;

struct GenConfig {
  std::string model_id = "gpt-3.5-turbo-0125";
  double temperature = 0.7;
  std::string prompt{kRewritePrompt};
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  int max_retries = 5;
  int requests_per_minute = 0;  // 0 disables rate limiting
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::seconds timeout{120};
  int max_prompt_only_requests = 200;
};

GenConfig gen_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GenConfig& cfg);

/// Serialized chat-completions request: {model, temperature, messages:[{role:"user", content}]}.
std::string request_body(const GenConfig& cfg, std::string_view content);
/// The configured prompt with the excerpt appended after a single space.
std::string rewrite_content(const GenConfig& cfg, std::string_view excerpt_text);
/// Key under which a request body is stored in a fixture file.
std::string request_key(std::string_view body);

struct HttpResponse {
  int status = 0;  // 0 means the connection failed
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& body, const std::string& api_key) = 0;
  /// False for transports that never touch the network.
  virtual bool needs_api_key() const { return true; }
};

/// HTTP(S) client for a chat-completions endpoint.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::chrono::seconds timeout = std::chrono::seconds{120});
  HttpResponse post(const std::string& url, const std::string& body, const std::string& api_key) override;

 private:
  std::chrono::seconds timeout_;
};

/// Recorded responses keyed by request_key(body). A value is a string, or an
/// array of strings served in turn to repeated identical requests.
class FixtureStore {
 public:
  FixtureStore() = default;
  FixtureStore(FixtureStore&& other) noexcept
      : responses_(std::move(other.responses_)), cursor_(std::move(other.cursor_)) {}
  static FixtureStore load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  void add(std::string_view request_body, std::string response);
  /// Next response recorded for this body, or nullopt when exhausted.
  std::optional<std::string> next(std::string_view request_body);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> responses_;
  std::map<std::string, std::size_t> cursor_;
};

/// Answers from a FixtureStore without any network access.
class ReplayTransport final : public Transport {
 public:
  explicit ReplayTransport(std::shared_ptr<FixtureStore> store) : store_(std::move(store)) {}
  HttpResponse post(const std::string& url, const std::string& body, const std::string& api_key) override;
  bool needs_api_key() const override { return false; }

 private:
  std::shared_ptr<FixtureStore> store_;
};

/// Forwards to another transport and records successful replies.
class RecordingTransport final : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner, std::shared_ptr<FixtureStore> store)
      : inner_(std::move(inner)), store_(std::move(store)) {}
  HttpResponse post(const std::string& url, const std::string& body, const std::string& api_key) override;

 private:
  std::shared_ptr<Transport> inner_;
  std::shared_ptr<FixtureStore> store_;
};

/// Wraps a chat-completions body around a reply text.
std::string completion_body(std::string_view content);

/// Trims whitespace and one layer of surrounding quotes. Throws
/// RefusalOrEmpty for an empty reply or one carrying [placeholder] markers.
std::string clean_response(std::string_view raw);

/// Sends prompts with retry, backoff and rate limiting. Safe to share
/// between worker threads.
class ChatClient {
 public:
  ChatClient(GenConfig cfg, std::shared_ptr<Transport> transport);

  /// One completed request; may take several attempts.
  std::string complete(std::string_view content);
  const GenConfig& config() const noexcept { return cfg_; }
  std::size_t attempts() const;

 private:
  void wait_for_slot();

  GenConfig cfg_;
  std::shared_ptr<Transport> transport_;
  mutable std::mutex mutex_;
  std::optional<std::chrono::steady_clock::time_point> last_request_;
  std::size_t attempts_ = 0;
};

/// Sends one rewrite request for a human excerpt.
Excerpt rewrite_excerpt(ChatClient& client, const Excerpt& ex);

/// Requests stories until their chunks yield n_excerpts; returns exactly that many.
std::vector<Excerpt> generate_prompt_only(ChatClient& client, std::string_view prompt, std::size_t n_excerpts,
                                          std::size_t target_words = 100, std::string_view id_prefix = "gen");

enum class JobMode { Rewrite, PromptOnly };
enum class ItemState { Pending, Done, Failed };

std::string_view to_string(JobMode mode) noexcept;
std::string_view to_string(ItemState state) noexcept;

struct JobItem {
  std::string input_id;  // source excerpt id, or a request slot name in prompt_only mode
  ItemState state = ItemState::Pending;
  std::string response;
  std::string error;
};

struct GenJob {
  std::string job_id;
  JobMode mode = JobMode::Rewrite;
  std::uint64_t order_seed = 0;
  std::size_t target_count = 0;  // prompt_only
  std::string prompt;            // prompt_only
  std::size_t target_words = 100;
  std::vector<JobItem> items;    // processing order

  std::size_t count(ItemState state) const;
};

/// Items are the inputs in a permutation seeded by order_seed.
GenJob make_rewrite_job(std::string job_id, std::vector<std::string> input_ids, std::uint64_t order_seed);
GenJob make_prompt_only_job(std::string job_id, std::size_t target_count, std::uint64_t order_seed,
                            std::string prompt = std::string{kStoryPrompt}, std::size_t target_words = 100);

nlohmann::json to_json(const GenJob& job);
GenJob gen_job_from_json(const nlohmann::json& j);
void save_job(const std::filesystem::path& path, const GenJob& job);
GenJob load_job(const std::filesystem::path& path);

struct JobRunOptions {
  std::size_t workers = 1;
  /// Stop after this many requests in this invocation (pending items stay pending).
  std::optional<std::size_t> stop_after;
};

/// Processes pending items in order, persisting the job after each one when
/// job_path is non-empty. Refusals mark an item failed and the job goes on;
/// AuthError stops the job and is rethrown. Returns the excerpts for every
/// done item, in job order.
std::vector<Excerpt> run_generation_job(GenJob& job, ChatClient& client, const std::vector<Excerpt>& inputs,
                                        const std::filesystem::path& job_path = {},
                                        const JobRunOptions& options = {});

/// Excerpts of the done items without sending anything.
std::vector<Excerpt> job_excerpts(const GenJob& job);

}  // namespace detective::textgen
