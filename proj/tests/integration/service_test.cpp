#include <doctest.h>

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <thread>

#include "detective/judges.hpp"
#include "detective/service.hpp"
#include "detective/text_util.hpp"
#include "synthetic.hpp"

using namespace detective;
using nlohmann::json;

namespace {

std::shared_ptr<const app::LoadedModel> model() {
  static const auto m = [] {
    const testing::TextSynth synth(31);
    const auto ds = testing::synthetic_dataset(synth, "svc", 120, 1);
    return std::make_shared<const app::LoadedModel>(
        app::LoadedModel{"svc-nb", models::train_text_model(models::ModelSpec{}, ds.excerpts)});
  }();
  return m;
}

class Running {
 public:
  Running(std::shared_ptr<const app::LoadedModel> m, app::ServiceOptions opts) : service_(std::move(m), opts) {
    port_ = service_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_.run(); });
    for (int i = 0; i < 200 && !service_.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds{5});
  }
  ~Running() {
    service_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(std::chrono::seconds{20});
    return c;
  }

 private:
  app::Service service_;
  int port_ = 0;
  std::thread thread_;
};

app::ServiceOptions options(const std::filesystem::path& dir) {
  app::ServiceOptions o;
  o.cors_origin = "http://quiz.example";
  o.quiz_dir = dir / "quizzes";
  o.results_path = dir / "results" / "judges.jsonl";
  return o;
}

Dataset quiz_source() {
  const testing::TextSynth synth(5);
  return testing::synthetic_dataset(synth, "q", 20, 2);
}

}  // namespace

TEST_CASE("health and classify") {
  const auto dir = testing::temp_dir("svc-classify");
  Running svc(model(), options(dir));
  auto cli = svc.client();

  auto health = cli.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["model_id"] == "svc-nb");
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "http://quiz.example");

  const testing::TextSynth synth(31);
  Rng rng(4);
  const auto text = synth.passage(Label::Ai, 100, rng);
  auto res = cli.Post("/classify", json{{"text", text}}.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto body = json::parse(res->body);
  const auto expect = app::classify_text(*model(), text);
  CHECK(body["label"] == std::string(to_string(expect.label)));
  CHECK(body["score_ai"].get<double>() == expect.score_ai);
  CHECK(body["model_kind"] == "naive_bayes");
  CHECK(body["excerpt_char_len"] == utf8_length(text));

  auto warn = cli.Post("/classify", R"({"text":"Tiny."})", "application/json");
  REQUIRE(warn);
  CHECK(json::parse(warn->body).contains("warning"));

  auto empty = cli.Post("/classify", R"({"text":"   "})", "application/json");
  REQUIRE(empty);
  CHECK(empty->status == 400);
  CHECK(json::parse(empty->body)["error"] == "empty_text");

  auto bad = cli.Post("/classify", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body)["error"] == "bad_request");

  auto pre = cli.Options("/classify");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
}

TEST_CASE("32 concurrent classify requests agree with the in-process verdict") {
  const auto dir = testing::temp_dir("svc-concurrent");
  Running svc(model(), options(dir));
  const testing::TextSynth synth(31);
  std::vector<std::string> texts;
  for (int i = 0; i < 32; ++i) {
    Rng rng(static_cast<std::uint64_t>(100 + i));
    texts.push_back(synth.passage(i % 2 ? Label::Ai : Label::Human, 100, rng));
  }
  std::vector<json> replies(32);
  std::vector<int> statuses(32, 0);
  std::vector<std::string> failures(32);
  std::vector<std::thread> threads;
  for (int i = 0; i < 32; ++i) {
    threads.emplace_back([&, i] {
      auto cli = svc.client();
      auto res = cli.Post("/classify", json{{"text", texts[i]}}.dump(), "application/json");
      if (res) {
        statuses[i] = res->status;
        replies[i] = json::parse(res->body);
      } else {
        failures[i] = httplib::to_string(res.error());
      }
    });
  }
  for (auto& t : threads) t.join();
  for (int i = 0; i < 32; ++i) {
    CAPTURE(i);
    CAPTURE(failures[i]);
    REQUIRE(statuses[i] == 200);
    CHECK(replies[i]["score_ai"].get<double>() == app::classify_text(*model(), texts[i]).score_ai);
  }
}

TEST_CASE("service without a model") {
  const auto dir = testing::temp_dir("svc-nomodel");
  Running svc(nullptr, options(dir));
  auto cli = svc.client();
  auto res = cli.Post("/classify", R"({"text":"Anything at all."})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 503);
  CHECK(json::parse(res->body)["error"] == "model_not_loaded");
  CHECK(json::parse(cli.Get("/health")->body)["status"] == "no_model");
}

TEST_CASE("quiz round trip") {
  const auto dir = testing::temp_dir("svc-quiz");
  const auto quiz = judges::build_quiz(quiz_source(), 10, 8, "weekly");
  judges::export_quiz(quiz, dir / "quizzes");
  Running svc(model(), options(dir));
  auto cli = svc.client();

  auto got = cli.Get("/quiz/weekly");
  REQUIRE(got);
  CHECK(got->status == 200);
  CHECK(got->body.find("true_label") == std::string::npos);
  const auto payload = json::parse(got->body);
  REQUIRE(payload["items"].size() == 10);

  CHECK(cli.Get("/quiz/nothing")->status == 404);
  CHECK(cli.Get("/quiz/..%2Fsecret")->status == 404);

  json answers = json::object();
  for (const auto& item : quiz.items) answers[item.item_id] = std::string(to_string(item.true_label));
  json partial = answers;
  partial.erase("item-03");
  auto inc = cli.Post("/quiz/weekly/answers", json{{"respondent_id", "ann"}, {"answers", partial}}.dump(),
                      "application/json");
  REQUIRE(inc);
  CHECK(inc->status == 400);
  CHECK(json::parse(inc->body)["error"] == "incomplete_answers");

  auto ok = cli.Post("/quiz/weekly/answers", json{{"respondent_id", "ann"}, {"answers", answers}}.dump(),
                     "application/json");
  REQUIRE(ok);
  CHECK(ok->status == 201);
  CHECK(json::parse(ok->body)["submitted"] == true);

  auto again = cli.Post("/quiz/weekly/answers", json{{"respondent_id", "ann"}, {"answers", answers}}.dump(),
                        "application/json");
  REQUIRE(again);
  CHECK(again->status == 409);

  // List form of the answers.
  json list = json::array();
  for (const auto& item : quiz.items) list.push_back({{"item_id", item.item_id}, {"label", "human"}});
  auto bob = cli.Post("/quiz/weekly/answers", json{{"respondent_id", "bob"}, {"answers", list}}.dump(),
                      "application/json");
  REQUIRE(bob);
  CHECK(bob->status == 201);

  auto score = cli.Get("/quiz/weekly/score/ann");
  REQUIRE(score);
  CHECK(score->status == 200);
  const auto s = json::parse(score->body);
  CHECK(s["score"] == 10);
  CHECK(s["quiz_size"] == 10);
  CHECK(s["items"].size() == 10);
  CHECK(s["items"][0]["correct"] == true);
  CHECK(json::parse(cli.Get("/quiz/weekly/score/bob")->body)["score"] == 5);
  CHECK(cli.Get("/quiz/weekly/score/nobody")->status == 404);

  auto bad = cli.Post("/quiz/weekly/answers", "[]", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  CHECK(judges::ResultsStore(dir / "results" / "judges.jsonl").all().size() == 2);
}
