#include <doctest.h>

#include "detective/app.hpp"
#include "detective/corpus.hpp"
#include "detective/eval.hpp"
#include "detective/judges.hpp"
#include "detective/models/model_io.hpp"
#include "detective/textgen.hpp"
#include "stub_server.hpp"
#include "synthetic.hpp"

using namespace detective;

namespace {

struct KeyEnv {
  KeyEnv() { ::setenv("DETECTIVE_PIPELINE_KEY", "sk-pipeline", 1); }
  ~KeyEnv() { ::unsetenv("DETECTIVE_PIPELINE_KEY"); }
};

}  // namespace

TEST_CASE("books to verdicts through a stub LLM endpoint") {
  KeyEnv key;
  const auto dir = testing::temp_dir("pipeline");
  const testing::TextSynth synth(99);

  // Ingest three books.
  std::vector<Excerpt> human;
  Rng rng(1);
  for (int b = 1; b <= 3; ++b) {
    const std::string id = "book" + std::to_string(b);
    const auto raw = synth.book("Book " + std::to_string(b), "Author", 7000, rng);
    auto chunks = corpus::chunk_text(id, corpus::strip_boilerplate({id, "Book", "Author", raw}));
    for (const auto& c : chunks) CHECK(c.word_count >= 1);
    human.insert(human.end(), chunks.begin(), chunks.end());
  }
  REQUIRE(human.size() > 150);

  // Rewrite every excerpt through the HTTP client.
  testing::StubChatServer server([&](const std::string& prompt) {
    const auto at = prompt.find("Text excerpt: ");
    if (at == std::string::npos) return std::string();
    const auto text = prompt.substr(at + 14);
    // The prompt carries only the text, so it doubles as the seed key.
    Excerpt src = make_excerpt(text, text, Origin::NovelChunk);
    return "\"" + testing::synthetic_rewrite_text(synth, src, 5) + "\"";
  });
  textgen::GenConfig cfg;
  cfg.endpoint_url = server.url();
  cfg.api_key_env = "DETECTIVE_PIPELINE_KEY";
  textgen::ChatClient client(cfg, std::make_shared<textgen::HttpTransport>(std::chrono::seconds{10}));
  std::vector<std::string> ids;
  for (const auto& h : human) ids.push_back(h.excerpt_id);
  auto job = textgen::make_rewrite_job("rw", ids, 42);
  textgen::JobRunOptions opts;
  opts.workers = 3;
  const auto ai = textgen::run_generation_job(job, client, human, dir / "rw.json", opts);
  CHECK(ai.size() == human.size());
  CHECK(server.requests() == human.size());

  // Balance, assemble and split.
  const auto balanced = corpus::balance_lengths(human, ai, 42);
  CHECK(std::abs(balanced.human_after.mean_chars - balanced.ai_after.mean_chars) <= 10.0);
  const auto ds = corpus::assemble_dataset("P", balanced.human, balanced.ai, 42);
  CHECK(ds.count(Label::Human) == ds.count(Label::Ai));
  eval::SplitSpec spec;
  spec.seed = 42;
  spec.pairing_mode = eval::PairingMode::Naive;
  const auto split = eval::split_dataset(ds, spec);
  const auto sizes = eval::split_sizes(ds.excerpts.size(), spec);
  CHECK(split.train.size() == sizes.train);
  CHECK(split.test.size() == sizes.test);
  CHECK(split.validation.size() == sizes.validation);

  // Train, evaluate, persist and serve a verdict.
  models::ModelSpec nb;
  nb.name = "NB";
  models::ModelSpec mlp;
  mlp.name = "MLP";
  mlp.kind = models::ModelKind::Mlp;
  mlp.mlp.hidden_units = 32;
  mlp.mlp.max_epochs = 40;
  const Dataset train{"PTrain", split.train, 0, {}};
  const Dataset test{"PTest", split.test, 0, {}};
  const Dataset unseen{"PUnseen", split.validation, 0, {}};
  const std::vector<eval::TrainedModel> trained = {eval::train_model(nb, train), eval::train_model(mlp, train)};
  const std::vector<eval::UnseenDataset> targets = {{test, eval::DatasetRelation::InDistribution},
                                                    {unseen, eval::DatasetRelation::SameAuthor}};
  const auto report = eval::generalisation_run(trained, targets);
  REQUIRE(report.rows.size() == 4);
  for (const auto& row : report.rows) {
    CAPTURE(row.dataset);
    CAPTURE(row.model);
    CHECK_FALSE(row.failed);
    CHECK(row.metrics.accuracy > 0.85);
  }

  const auto text_model = models::train_text_model(nb, split.train);
  models::save_model(dir / "nb.json", text_model);
  const auto served = app::load_served_model(dir / "nb.json");
  std::size_t right = 0;
  for (const auto& e : split.test) right += app::classify_text(served, e.text).label == e.label;
  CHECK(static_cast<double>(right) / static_cast<double>(split.test.size()) > 0.85);

  // A judge quiz over the held-out excerpts.
  const auto quiz = judges::build_quiz(unseen, 10, 3);
  judges::export_quiz(quiz, dir / "quizzes");
  const auto loaded = judges::load_quiz(dir / "quizzes", quiz.quiz_id);
  std::map<std::string, Label> answers;
  for (const auto& item : loaded.items) answers[item.item_id] = Label::Human;
  CHECK(judges::score_result(loaded, "r", answers).score == 5);
}
