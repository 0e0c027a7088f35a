#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "detective/app.hpp"

namespace detective::app {

struct ServiceOptions {
  std::string cors_origin = "*";
  std::filesystem::path quiz_dir;
  std::filesystem::path results_path;  // JSONL of judge results
};

/// HTTP front end:
///   POST /classify                      {text} -> ClassifyResponse
///   GET  /quiz/:id                      respondent payload (no labels)
///   POST /quiz/:id/answers              {respondent_id, answers:{item_id: label}}
///   GET  /quiz/:id/score/:respondent    score after submission
///   GET  /health                        {status, model_id}
/// Errors are {error, detail} with a 4xx/5xx status.
class Service {
 public:
  /// model may be null; /classify then answers 503.
  Service(std::shared_ptr<const LoadedModel> model, ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and returns the port (an ephemeral one when port is 0).
  int bind(const std::string& address, int port);
  /// Serves until stop(); requires bind().
  void run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace detective::app
