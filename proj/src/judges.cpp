#include "detective/judges.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <nlohmann/json.hpp>

#include "detective/error.hpp"
#include "detective/random.hpp"
#include "detective/stats.hpp"
#include "detective/text_util.hpp"

namespace detective::judges {

using nlohmann::json;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Quiz build_quiz(const Dataset& dataset, std::size_t size, std::uint64_t seed, std::string quiz_id) {
  if (size == 0) throw Error(ErrorCode::InvalidArgument, "quiz size must be >= 1");
  std::vector<const Excerpt*> human, ai;
  for (const auto& ex : dataset.excerpts) (ex.label == Label::Human ? human : ai).push_back(&ex);
  const std::size_t n_human = size / 2;
  const std::size_t n_ai = size - n_human;
  if (human.size() < n_human || ai.size() < n_ai) {
    throw Error(ErrorCode::InsufficientItems, "need " + std::to_string(n_human) + " human and " +
                                                  std::to_string(n_ai) + " ai excerpts, dataset has " +
                                                  std::to_string(human.size()) + " and " + std::to_string(ai.size()));
  }

  Rng rng(seed);
  std::vector<const Excerpt*> picked;
  for (auto i : rng.sample_indices(human.size(), n_human)) picked.push_back(human[i]);
  for (auto i : rng.sample_indices(ai.size(), n_ai)) picked.push_back(ai[i]);
  rng.shuffle(picked);

  Quiz quiz;
  quiz.seed = seed;
  quiz.quiz_id = quiz_id.empty() ? "quiz-" + std::to_string(seed) : std::move(quiz_id);
  for (std::size_t i = 0; i < picked.size(); ++i) {
    // Item ids are positional so they cannot hint at provenance.
    char id[32];
    std::snprintf(id, sizeof id, "item-%02zu", i + 1);
    quiz.items.push_back({id, picked[i]->text, picked[i]->label});
  }
  return quiz;
}

json respondent_payload(const Quiz& quiz) {
  json items = json::array();
  for (const auto& it : quiz.items) items.push_back({{"item_id", it.item_id}, {"text", it.text}});
  return {{"quiz_id", quiz.quiz_id}, {"items", items}};
}

json answer_key(const Quiz& quiz) {
  json key = json::object();
  for (const auto& it : quiz.items) key[it.item_id] = std::string(to_string(it.true_label));
  return {{"quiz_id", quiz.quiz_id}, {"seed", quiz.seed}, {"key", key}};
}

Quiz quiz_from_parts(const json& payload, const json& key) {
  try {
    Quiz q;
    q.quiz_id = payload.at("quiz_id").get<std::string>();
    if (key.at("quiz_id").get<std::string>() != q.quiz_id) {
      throw Error(ErrorCode::Parse, "answer key belongs to a different quiz");
    }
    q.seed = key.value("seed", std::uint64_t{0});
    const auto& k = key.at("key");
    for (const auto& item : payload.at("items")) {
      QuizItem qi;
      qi.item_id = item.at("item_id").get<std::string>();
      qi.text = item.at("text").get<std::string>();
      qi.true_label = parse_label(k.at(qi.item_id).get<std::string>());
      q.items.push_back(std::move(qi));
    }
    return q;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
}

void export_quiz(const Quiz& quiz, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / (quiz.quiz_id + ".json"), respondent_payload(quiz).dump(2));
  write_file_atomic(dir / (quiz.quiz_id + ".key.json"), answer_key(quiz).dump(2));
}

Quiz load_quiz(const std::filesystem::path& dir, const std::string& quiz_id) {
  auto parse = [](const std::filesystem::path& p) {
    auto j = json::parse(read_file(p), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::Parse, p.string() + " is not valid JSON");
    return j;
  };
  return quiz_from_parts(parse(dir / (quiz_id + ".json")), parse(dir / (quiz_id + ".key.json")));
}

JudgeResult score_result(const Quiz& quiz, std::string respondent_id, const std::map<std::string, Label>& answers) {
  std::string missing;
  int score = 0;
  for (const auto& item : quiz.items) {
    auto it = answers.find(item.item_id);
    if (it == answers.end()) {
      missing += missing.empty() ? item.item_id : ", " + item.item_id;
      continue;
    }
    score += it->second == item.true_label;
  }
  if (!missing.empty()) throw Error(ErrorCode::IncompleteAnswers, "missing answers for " + missing);
  if (answers.size() != quiz.items.size()) {
    throw Error(ErrorCode::InvalidArgument, "answers reference items that are not in quiz " + quiz.quiz_id);
  }
  return {quiz.quiz_id, std::move(respondent_id), answers, score, utc_now()};
}

json to_json(const JudgeResult& r) {
  json answers = json::object();
  for (const auto& [id, label] : r.answers) answers[id] = std::string(to_string(label));
  return {{"quiz_id", r.quiz_id},
          {"respondent_id", r.respondent_id},
          {"answers", answers},
          {"score", r.score},
          {"completed_at", r.completed_at}};
}

JudgeResult judge_result_from_json(const json& j) {
  try {
    JudgeResult r;
    r.quiz_id = j.at("quiz_id").get<std::string>();
    r.respondent_id = j.at("respondent_id").get<std::string>();
    for (const auto& [id, label] : j.at("answers").items()) r.answers[id] = parse_label(label.get<std::string>());
    r.score = j.at("score").get<int>();
    r.completed_at = j.value("completed_at", "");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
}

ResultsStore::ResultsStore(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (in && std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::Parse, path_.string() + ": bad results line");
    results_.push_back(judge_result_from_json(j));
  }
}

bool ResultsStore::append(const JudgeResult& result) {
  std::lock_guard lock(mutex_);
  for (const auto& r : results_) {
    if (r.quiz_id == result.quiz_id && r.respondent_id == result.respondent_id) return false;
  }
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error(ErrorCode::Io, "cannot append to " + path_.string());
  out << to_json(result).dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write to " + path_.string() + " failed");
  results_.push_back(result);
  return true;
}

std::optional<JudgeResult> ResultsStore::find(const std::string& quiz_id, const std::string& respondent_id) const {
  std::lock_guard lock(mutex_);
  for (const auto& r : results_) {
    if (r.quiz_id == quiz_id && r.respondent_id == respondent_id) return r;
  }
  return std::nullopt;
}

std::vector<JudgeResult> ResultsStore::all() const {
  std::lock_guard lock(mutex_);
  return results_;
}

TTestResult t_test_upper(std::span<const double> scores, double mu0, double quiz_size) {
  if (scores.size() < 2) throw Error(ErrorCode::TooFewScores, "a t-test needs at least two scores");
  if (!(quiz_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "quiz_size must be > 0");
  TTestResult r;
  r.n = scores.size();
  r.mu0 = mu0;
  const double n = static_cast<double>(r.n);
  double sum = 0.0;
  for (double s : scores) sum += s;
  r.mean = sum / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - r.mean) * (s - r.mean);
  r.sd = std::sqrt(ss / (n - 1.0));
  if (!(r.sd > 0.0)) throw Error(ErrorCode::ZeroVariance, "all scores are identical");
  const double se = r.sd / std::sqrt(n);
  r.df = n - 1.0;
  r.t = (r.mean - mu0) / se;
  r.p_one_tailed = stats::student_t_cdf(r.t, r.df);
  r.ci_upper_one_sided = r.mean + stats::student_t_quantile(0.95, r.df) * se;
  r.as_proportion = r.ci_upper_one_sided / quiz_size;
  return r;
}

TTestResult t_test_upper(std::span<const int> scores, double mu0, double quiz_size) {
  std::vector<double> v(scores.begin(), scores.end());
  return t_test_upper(std::span<const double>(v), mu0, quiz_size);
}

}  // namespace detective::judges
