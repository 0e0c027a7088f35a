#include "detective/service.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "detective/error.hpp"
#include "detective/judges.hpp"

namespace detective::app {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view error, std::string_view detail = {}) {
  json body{{"error", error}};
  if (!detail.empty()) body["detail"] = detail;
  send_json(res, status, body);
}

bool valid_id(std::string_view id) {
  return !id.empty() && id.size() <= 128 && std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
           c == '.';
  }) && id.find("..") == std::string_view::npos;
}

}  // namespace

struct Service::Impl {
  std::shared_ptr<const LoadedModel> model;
  ServiceOptions options;
  httplib::Server server;
  std::unique_ptr<judges::ResultsStore> results;
  std::mutex quiz_mutex;
  std::map<std::string, std::shared_ptr<const judges::Quiz>> quizzes;
  std::atomic<bool> bound{false};

  std::shared_ptr<const judges::Quiz> quiz(const std::string& id) {
    if (!valid_id(id) || options.quiz_dir.empty()) return nullptr;
    std::lock_guard lock(quiz_mutex);
    if (auto it = quizzes.find(id); it != quizzes.end()) return it->second;
    if (!std::filesystem::exists(options.quiz_dir / (id + ".json"))) return nullptr;
    auto q = std::make_shared<const judges::Quiz>(judges::load_quiz(options.quiz_dir, id));
    quizzes.emplace(id, q);
    return q;
  }

  void routes() {
    server.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", options.cors_origin);
      res.set_header("Vary", "Origin");
    });
    server.Options(R"(.*)", [this](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      } catch (...) {
        send_error(res, 500, "internal");
      }
    });

    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200,
                {{"status", model ? "ok" : "no_model"}, {"model_id", model ? json(model->model_id) : json(nullptr)}});
    });

    server.Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
      if (!model) return send_error(res, 503, "model_not_loaded");
      auto body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string()) {
        return send_error(res, 400, "bad_request", "expected {\"text\": string}");
      }
      const auto text = body["text"].get<std::string>();
      try {
        send_json(res, 200, to_json(classify_text(*model, text)));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) return send_error(res, 400, "empty_text");
        throw;
      }
    });

    server.Get("/quiz/:id", [this](const httplib::Request& req, httplib::Response& res) {
      auto q = quiz(req.path_params.at("id"));
      if (!q) return send_error(res, 404, "unknown_quiz");
      send_json(res, 200, judges::respondent_payload(*q));
    });

    server.Post("/quiz/:id/answers", [this](const httplib::Request& req, httplib::Response& res) {
      auto q = quiz(req.path_params.at("id"));
      if (!q) return send_error(res, 404, "unknown_quiz");
      if (!results) return send_error(res, 503, "results_store_unavailable");
      auto body = json::parse(req.body, nullptr, false);
      std::string respondent;
      std::map<std::string, Label> answers;
      try {
        if (body.is_discarded()) throw Error(ErrorCode::Parse, "body is not JSON");
        respondent = body.at("respondent_id").get<std::string>();
        const auto& a = body.at("answers");
        if (a.is_object()) {
          for (const auto& [item, label] : a.items()) answers[item] = parse_label(label.get<std::string>());
        } else {
          for (const auto& entry : a) {
            answers[entry.at("item_id").get<std::string>()] = parse_label(entry.at("label").get<std::string>());
          }
        }
      } catch (const std::exception& e) {
        return send_error(res, 400, "bad_request", e.what());
      }
      if (!valid_id(respondent)) return send_error(res, 400, "bad_request", "invalid respondent_id");
      judges::JudgeResult result;
      try {
        result = judges::score_result(*q, respondent, answers);
      } catch (const Error& e) {
        return send_error(res, 400, e.code() == ErrorCode::IncompleteAnswers ? "incomplete_answers" : "bad_request",
                          e.what());
      }
      if (!results->append(result)) return send_error(res, 409, "already_submitted");
      send_json(res, 201, {{"quiz_id", result.quiz_id}, {"respondent_id", result.respondent_id}, {"submitted", true}});
    });

    server.Get("/quiz/:id/score/:respondent", [this](const httplib::Request& req, httplib::Response& res) {
      auto q = quiz(req.path_params.at("id"));
      if (!q) return send_error(res, 404, "unknown_quiz");
      if (!results) return send_error(res, 503, "results_store_unavailable");
      auto r = results->find(q->quiz_id, req.path_params.at("respondent"));
      if (!r) return send_error(res, 404, "no_submission");
      json items = json::array();
      for (const auto& item : q->items) {
        const auto answer = r->answers.at(item.item_id);
        items.push_back({{"item_id", item.item_id},
                         {"answer", std::string(to_string(answer))},
                         {"correct", answer == item.true_label}});
      }
      send_json(res, 200,
                {{"quiz_id", r->quiz_id},
                 {"respondent_id", r->respondent_id},
                 {"score", r->score},
                 {"quiz_size", q->items.size()},
                 {"completed_at", r->completed_at},
                 {"items", items}});
    });
  }
};

Service::Service(std::shared_ptr<const LoadedModel> model, ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->model = std::move(model);
  impl_->options = std::move(options);
  if (!impl_->options.results_path.empty()) {
    if (impl_->options.results_path.has_parent_path()) {
      std::filesystem::create_directories(impl_->options.results_path.parent_path());
    }
    impl_->results = std::make_unique<judges::ResultsStore>(impl_->options.results_path);
  }
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind(const std::string& address, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(address) : (impl_->server.bind_to_port(address, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + address + ":" + std::to_string(port));
  impl_->bound = true;
  return bound;
}

void Service::run() {
  if (!impl_->bound) throw Error(ErrorCode::InvalidArgument, "Service::run called before bind");
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

}  // namespace detective::app
