#include "stub_server.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "detective/textgen.hpp"

namespace detective::testing {

StubChatServer::StubChatServer(Reply reply)
    : server_(std::make_unique<httplib::Server>()), reply_(std::move(reply)) {
  if (!reply_) reply_ = [](const std::string&) { return std::string("A stub reply."); };
  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    std::string prompt;
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (!body.is_discarded()) prompt = body["messages"][0]["content"].get<std::string>();
    int status = 200;
    {
      std::lock_guard lock(mutex_);
      times_.push_back(std::chrono::steady_clock::now());
      prompts_.push_back(prompt);
      authorizations_.push_back(req.get_header_value("Authorization"));
      if (!script_.empty()) {
        status = script_.front();
        script_.pop_front();
      }
    }
    res.status = status;
    if (status == 200) {
      res.set_content(textgen::completion_body(reply_(prompt)), "application/json");
    } else {
      res.set_content(R"({"error":{"message":"scripted failure"}})", "application/json");
    }
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

StubChatServer::~StubChatServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

void StubChatServer::script(std::vector<int> statuses) {
  std::lock_guard lock(mutex_);
  script_.assign(statuses.begin(), statuses.end());
}

std::string StubChatServer::url() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
}

std::size_t StubChatServer::requests() const {
  std::lock_guard lock(mutex_);
  return times_.size();
}

std::vector<std::chrono::steady_clock::time_point> StubChatServer::times() const {
  std::lock_guard lock(mutex_);
  return times_;
}

std::vector<std::string> StubChatServer::prompts() const {
  std::lock_guard lock(mutex_);
  return prompts_;
}

std::vector<std::string> StubChatServer::authorizations() const {
  std::lock_guard lock(mutex_);
  return authorizations_;
}

}  // namespace detective::testing
