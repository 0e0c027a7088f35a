#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "detective/excerpt.hpp"

namespace detective::judges {

struct QuizItem {
  std::string item_id;
  std::string text;
  Label true_label = Label::Human;
};

/// A human-judge quiz. true_label never leaves the server: the respondent
/// payload and the answer key are serialized separately.
struct Quiz {
  std::string quiz_id;
  std::vector<QuizItem> items;
  std::uint64_t seed = 0;
};

/// Stratified half human / half ai sample, shuffled by seed. Odd sizes give
/// the extra item to ai.
Quiz build_quiz(const Dataset& dataset, std::size_t size, std::uint64_t seed, std::string quiz_id = {});

/// {quiz_id, items:[{item_id, text}]}
nlohmann::json respondent_payload(const Quiz& quiz);
/// {quiz_id, seed, key:{item_id: label}}
nlohmann::json answer_key(const Quiz& quiz);
Quiz quiz_from_parts(const nlohmann::json& payload, const nlohmann::json& key);

/// Writes <dir>/<quiz_id>.json (respondent payload) and <dir>/<quiz_id>.key.json.
void export_quiz(const Quiz& quiz, const std::filesystem::path& dir);
Quiz load_quiz(const std::filesystem::path& dir, const std::string& quiz_id);

struct JudgeResult {
  std::string quiz_id;
  std::string respondent_id;
  std::map<std::string, Label> answers;
  int score = 0;
  std::string completed_at;
};

/// Throws IncompleteAnswers naming any unanswered item; answers for items
/// not in the quiz are rejected as InvalidArgument.
JudgeResult score_result(const Quiz& quiz, std::string respondent_id, const std::map<std::string, Label>& answers);

nlohmann::json to_json(const JudgeResult& result);
JudgeResult judge_result_from_json(const nlohmann::json& j);

/// Append-only JSONL store of results; at most one result per
/// (quiz, respondent). Safe for concurrent use.
class ResultsStore {
 public:
  explicit ResultsStore(std::filesystem::path path);

  /// False when the respondent already submitted for this quiz.
  bool append(const JudgeResult& result);
  std::optional<JudgeResult> find(const std::string& quiz_id, const std::string& respondent_id) const;
  std::vector<JudgeResult> all() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::vector<JudgeResult> results_;
};

/// One-sample, lower-tailed t-test of H1: mean < mu0. sd uses the n-1
/// denominator. The confidence bound is the one-sided 95% upper bound.
struct TTestResult {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double mu0 = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p_one_tailed = 0.0;
  double ci_upper_one_sided = 0.0;
  double as_proportion = 0.0;  // ci_upper_one_sided / quiz_size
};

TTestResult t_test_upper(std::span<const double> scores, double mu0, double quiz_size);
TTestResult t_test_upper(std::span<const int> scores, double mu0, double quiz_size);

}  // namespace detective::judges
