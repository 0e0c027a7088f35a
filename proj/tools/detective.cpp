// Command-line front end for the detection pipeline.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "detective/app.hpp"
#include "detective/corpus.hpp"
#include "detective/error.hpp"
#include "detective/eval.hpp"
#include "detective/judges.hpp"
#include "detective/models/model_io.hpp"
#include "detective/service.hpp"
#include "detective/text_util.hpp"
#include "detective/textgen.hpp"

namespace fs = std::filesystem;
using namespace detective;
using nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string fixtures;
  app::AppConfig config;

  std::uint64_t effective_seed() const { return seed.value_or(config.seed); }
};

std::vector<Excerpt> read_all(const std::vector<std::string>& paths) {
  std::vector<Excerpt> out;
  for (const auto& p : paths) {
    auto part = read_jsonl(fs::path(p));
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

void print_stats(const char* label, const corpus::LengthStats& s) {
  std::printf("  %-10s n=%-6zu mean=%7.1f std=%6.1f min=%zu max=%zu\n", label, s.n, s.mean_chars, s.std_chars,
              s.min_chars, s.max_chars);
}

// ---- ingest -------------------------------------------------------------------

struct IngestArgs {
  std::string manifest;
  std::string out;
  std::size_t target_words = 100;
  std::string role = "all";
};

int run_ingest(const Globals& g, const IngestArgs& a) {
  const fs::path manifest = a.manifest.empty() ? g.config.corpus_manifest : fs::path(a.manifest);
  if (manifest.empty()) throw Error(ErrorCode::InvalidArgument, "no corpus manifest given");
  const fs::path out = a.out.empty() ? g.config.datasets_dir / "chunks" : fs::path(a.out);
  fs::create_directories(out);
  std::size_t total = 0;
  for (const auto& entry : corpus::load_manifest(manifest)) {
    if (a.role == "base" && entry.role != corpus::BookRole::Base) continue;
    if (a.role == "unseen" && entry.role != corpus::BookRole::Unseen) continue;
    const auto raw = corpus::load_book(entry);
    const auto chunks = corpus::chunk_text(entry.book_id, corpus::strip_boilerplate(raw), a.target_words);
    write_jsonl(out / (entry.book_id + ".jsonl"), chunks);
    std::printf("%-12s %-40s %6zu excerpts\n", entry.book_id.c_str(), entry.title.c_str(), chunks.size());
    total += chunks.size();
  }
  std::printf("total %zu excerpts written to %s\n", total, out.string().c_str());
  return 0;
}

// ---- generate -----------------------------------------------------------------

struct GenerateArgs {
  std::string mode = "rewrite";
  std::vector<std::string> inputs;
  std::size_t count = 0;
  std::string prompt;
  std::string job;
  std::string out;
  std::size_t workers = 1;
  std::optional<std::size_t> limit;
  std::string record;
  std::size_t target_words = 100;
};

int run_generate(const Globals& g, const GenerateArgs& a) {
  std::shared_ptr<textgen::Transport> transport;
  std::shared_ptr<textgen::FixtureStore> recorded;
  if (!g.fixtures.empty()) {
    transport = std::make_shared<textgen::ReplayTransport>(
        std::make_shared<textgen::FixtureStore>(textgen::FixtureStore::load(g.fixtures)));
  } else {
    transport = std::make_shared<textgen::HttpTransport>(g.config.generation.timeout);
    if (!a.record.empty()) {
      recorded = fs::exists(a.record)
                     ? std::make_shared<textgen::FixtureStore>(textgen::FixtureStore::load(a.record))
                     : std::make_shared<textgen::FixtureStore>();
      transport = std::make_shared<textgen::RecordingTransport>(transport, recorded);
    }
  }
  textgen::ChatClient client(g.config.generation, transport);

  const auto inputs = read_all(a.inputs);
  textgen::GenJob job;
  if (!a.job.empty() && fs::exists(a.job)) {
    job = textgen::load_job(a.job);
    std::printf("resuming %s: %zu done, %zu failed, %zu pending\n", job.job_id.c_str(),
                job.count(textgen::ItemState::Done), job.count(textgen::ItemState::Failed),
                job.count(textgen::ItemState::Pending));
  } else if (a.mode == "rewrite") {
    std::vector<std::string> ids;
    for (const auto& ex : inputs) {
      if (ex.label == Label::Human) ids.push_back(ex.excerpt_id);
    }
    if (ids.empty()) throw Error(ErrorCode::EmptyInput, "no human excerpts to rewrite");
    job = textgen::make_rewrite_job(a.job.empty() ? "rewrite" : fs::path(a.job).stem().string(), std::move(ids),
                                    g.effective_seed());
  } else if (a.mode == "prompt_only") {
    if (a.count == 0) throw Error(ErrorCode::InvalidArgument, "--count is required in prompt_only mode");
    job = textgen::make_prompt_only_job(a.job.empty() ? "gen" : fs::path(a.job).stem().string(), a.count,
                                        g.effective_seed(),
                                        a.prompt.empty() ? std::string(textgen::kStoryPrompt) : a.prompt,
                                        a.target_words);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown mode '" + a.mode + "'");
  }

  textgen::JobRunOptions opts;
  opts.workers = a.workers;
  opts.stop_after = a.limit;
  std::vector<Excerpt> produced;
  try {
    produced = textgen::run_generation_job(job, client, inputs, a.job, opts);
  } catch (...) {
    if (recorded) recorded->save(a.record);
    throw;
  }
  if (recorded) recorded->save(a.record);
  if (!a.out.empty()) write_jsonl(fs::path(a.out), produced);
  std::printf("%zu done, %zu failed, %zu pending; %zu excerpts%s%s\n", job.count(textgen::ItemState::Done),
              job.count(textgen::ItemState::Failed), job.count(textgen::ItemState::Pending), produced.size(),
              a.out.empty() ? "" : " written to ", a.out.c_str());
  if (job.mode == textgen::JobMode::PromptOnly && produced.size() < job.target_count && !a.limit) {
    throw Error(ErrorCode::InsufficientOutput, "job produced " + std::to_string(produced.size()) + " of " +
                                                   std::to_string(job.target_count) + " excerpts");
  }
  return 0;
}

// ---- build-datasets -----------------------------------------------------------

struct BuildArgs {
  std::vector<std::string> human;
  std::vector<std::string> ai;
  std::string name;
  std::string out;
  bool no_balance = false;
  bool no_truncate = false;
  bool split = false;
  std::string pairing = "naive";
};

int run_build(const Globals& g, const BuildArgs& a) {
  auto human = read_all(a.human);
  auto ai = read_all(a.ai);
  const fs::path out = a.out.empty() ? g.config.datasets_dir : fs::path(a.out);
  fs::create_directories(out);
  if (!a.no_balance) {
    corpus::BalanceOptions opts;
    if (a.no_truncate) opts.truncation.reset();
    auto balanced = corpus::balance_lengths(human, ai, g.effective_seed(), opts);
    std::printf("length balance (characters)\n");
    print_stats("human in", balanced.human_before);
    print_stats("ai in", balanced.ai_before);
    print_stats("human out", balanced.human_after);
    print_stats("ai out", balanced.ai_after);
    human = std::move(balanced.human);
    ai = std::move(balanced.ai);
  }
  const auto ds = corpus::assemble_dataset(a.name, human, ai, g.effective_seed(), "build-datasets");
  write_jsonl(out / (a.name + ".jsonl"), ds.excerpts);
  std::printf("%s: %zu excerpts (%zu human, %zu ai)\n", a.name.c_str(), ds.excerpts.size(), ds.count(Label::Human),
              ds.count(Label::Ai));
  if (a.split) {
    eval::SplitSpec spec;
    spec.seed = g.effective_seed();
    spec.pairing_mode = eval::parse_pairing_mode(a.pairing);
    const auto parts = eval::split_dataset(ds, spec);
    const std::pair<const char*, const std::vector<Excerpt>*> files[] = {
        {"Train", &parts.train}, {"Test", &parts.test}, {"Unseen", &parts.validation}};
    for (const auto& [suffix, rows] : files) {
      write_jsonl(out / (a.name + suffix + ".jsonl"), *rows);
      std::printf("%s%s: %zu excerpts\n", a.name.c_str(), suffix, rows->size());
    }
  }
  return 0;
}

// ---- train / evaluate / classify -----------------------------------------------

struct TrainArgs {
  std::string model = "nb";
  std::vector<std::string> train;
  std::string out;
  double alpha = 0.7;
  std::size_t hidden = 155;
  int max_epochs = 200;
};

int run_train(const Globals& g, const TrainArgs& a) {
  models::ModelSpec spec;
  spec.kind = models::parse_model_kind(a.model);
  spec.alpha = a.alpha;
  spec.mlp.hidden_units = a.hidden;
  spec.mlp.max_epochs = a.max_epochs;
  spec.mlp.seed = g.effective_seed();
  const auto training = read_all(a.train);
  const auto start = std::chrono::steady_clock::now();
  auto model = models::train_text_model(spec, training);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const fs::path out = a.out.empty() ? g.config.models_dir / (a.model + ".model") : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  models::save_model(out, model);
  std::printf("trained %s on %zu excerpts: vocabulary %zu tokens, %.2f s; saved %s\n",
              std::string(models::to_string(spec.kind)).c_str(), training.size(), model.vocab.size(), seconds,
              out.string().c_str());
  return 0;
}

struct EvaluateArgs {
  std::string manifest;
  std::string csv;
};

int run_evaluate(const Globals& g, const EvaluateArgs& a) {
  const auto report = eval::run_experiment(fs::path(a.manifest));
  std::fputs(report.to_table().c_str(), stdout);
  const fs::path csv = a.csv.empty() ? g.config.results_dir / (fs::path(a.manifest).stem().string() + ".csv")
                                     : fs::path(a.csv);
  if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
  write_file_atomic(csv, report.to_csv());
  std::printf("csv written to %s\n", csv.string().c_str());
  return 0;
}

struct ClassifyArgs {
  std::string model;
  std::string text;
  std::string file;
};

int run_classify(const Globals& g, const ClassifyArgs& a) {
  const fs::path path = a.model.empty() ? g.config.service.model : fs::path(a.model);
  if (path.empty()) throw Error(ErrorCode::InvalidArgument, "no model given");
  const auto model = app::load_served_model(path);
  const std::string text = a.file.empty() ? a.text : read_file(a.file);
  const auto r = app::classify_text(model, text);
  std::puts(app::verdict_line(r).c_str());
  if (r.warning) std::fprintf(stderr, "warning: %s\n", r.warning->c_str());
  return 0;
}

// ---- quiz ---------------------------------------------------------------------

struct QuizExportArgs {
  std::string dataset;
  std::size_t size = 10;
  std::string out;
  std::string id;
};

int run_quiz_export(const Globals& g, const QuizExportArgs& a) {
  const auto ds = load_dataset(a.dataset);
  const auto quiz = judges::build_quiz(ds, a.size, g.effective_seed(), a.id);
  const fs::path out = a.out.empty() ? g.config.quiz_dir : fs::path(a.out);
  judges::export_quiz(quiz, out);
  std::printf("quiz %s: %zu items written to %s\n", quiz.quiz_id.c_str(), quiz.items.size(), out.string().c_str());
  return 0;
}

struct QuizScoreArgs {
  std::string quiz_dir;
  std::string quiz;
  std::string respondent;
  std::string answers;
  std::string results;
};

int run_quiz_score(const Globals& g, const QuizScoreArgs& a) {
  const fs::path dir = a.quiz_dir.empty() ? g.config.quiz_dir : fs::path(a.quiz_dir);
  const auto quiz = judges::load_quiz(dir, a.quiz);
  auto j = json::parse(read_file(a.answers), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::Parse, "answers must be a JSON object item_id -> label");
  std::map<std::string, Label> answers;
  for (const auto& [item, label] : j.items()) answers[item] = parse_label(label.get<std::string>());
  const auto result = judges::score_result(quiz, a.respondent, answers);
  if (!a.results.empty()) {
    judges::ResultsStore store(a.results);
    if (!store.append(result)) {
      throw Error(ErrorCode::InvalidArgument, "respondent " + a.respondent + " already submitted quiz " + a.quiz);
    }
  }
  std::printf("%s scored %d/%zu\n", a.respondent.c_str(), result.score, quiz.items.size());
  return 0;
}

struct QuizTTestArgs {
  std::string results;
  std::string quiz;
  std::string scores;
  double mu0 = 5.5;
  double quiz_size = 10;
};

int run_quiz_ttest(const Globals&, const QuizTTestArgs& a) {
  std::vector<double> scores;
  if (!a.scores.empty()) {
    std::stringstream ss(a.scores);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        scores.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw Error(ErrorCode::Parse, "bad score '" + tok + "'");
      }
    }
  } else if (!a.results.empty()) {
    judges::ResultsStore store(a.results);
    for (const auto& r : store.all()) {
      if (a.quiz.empty() || r.quiz_id == a.quiz) scores.push_back(r.score);
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "give --scores or --results");
  }
  const auto t = judges::t_test_upper(scores, a.mu0, a.quiz_size);
  std::printf("n=%zu mean=%.4f sd=%.4f\n", t.n, t.mean, t.sd);
  std::printf("t(%g) = %.4f, one-tailed p = %.5f (H1: mean < %g)\n", t.df, t.t, t.p_one_tailed, t.mu0);
  std::printf("95%% upper bound: %.4f points (%.1f%%)\n", t.ci_upper_one_sided, 100.0 * t.as_proportion);
  return 0;
}

// ---- serve --------------------------------------------------------------------

struct ServeArgs {
  std::string model;
  std::string quiz_dir;
  std::string results;
  std::string bind;
  std::optional<int> port;
  std::string cors;
};

int run_serve(const Globals& g, const ServeArgs& a) {
  const fs::path model_path = a.model.empty() ? g.config.service.model : fs::path(a.model);
  std::shared_ptr<const app::LoadedModel> model;
  if (!model_path.empty()) model = std::make_shared<const app::LoadedModel>(app::load_served_model(model_path));
  app::ServiceOptions opts;
  opts.cors_origin = a.cors.empty() ? g.config.service.cors_origin : a.cors;
  opts.quiz_dir = a.quiz_dir.empty() ? g.config.quiz_dir : fs::path(a.quiz_dir);
  opts.results_path = a.results.empty() ? g.config.results_dir / "judge_results.jsonl" : fs::path(a.results);
  app::Service service(model, opts);
  const std::string bind = a.bind.empty() ? g.config.service.bind_address : a.bind;
  const int port = service.bind(bind, a.port.value_or(g.config.service.port));
  std::printf("listening on http://%s:%d (model %s)\n", bind.c_str(), port,
              model ? model->model_id.c_str() : "none");
  std::fflush(stdout);
  service.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Detect AI-rewritten crime fiction excerpts"};
  cli.require_subcommand(1);
  Globals g;
  cli.add_option("--config", g.config_path, "JSON config file");
  cli.add_option("--seed", g.seed, "Seed for every random choice");
  cli.add_option("--fixtures", g.fixtures, "Replay generation responses from this fixture file");

  IngestArgs ingest;
  auto* c_ingest = cli.add_subcommand("ingest", "Strip and chunk the books of a corpus manifest");
  c_ingest->add_option("--manifest", ingest.manifest, "Corpus manifest");
  c_ingest->add_option("--out", ingest.out, "Output directory for per-book JSONL");
  c_ingest->add_option("--target-words", ingest.target_words, "Minimum words per excerpt")->check(CLI::PositiveNumber);
  c_ingest->add_option("--role", ingest.role, "base, unseen or all")
      ->check(CLI::IsMember({"base", "unseen", "all"}));

  GenerateArgs gen;
  auto* c_gen = cli.add_subcommand("generate", "Rewrite excerpts or generate stories through the LLM endpoint");
  c_gen->add_option("--mode", gen.mode, "rewrite or prompt_only")->check(CLI::IsMember({"rewrite", "prompt_only"}));
  c_gen->add_option("--input", gen.inputs, "Human excerpt JSONL files (rewrite mode)");
  c_gen->add_option("--count", gen.count, "Excerpts to produce (prompt_only mode)");
  c_gen->add_option("--prompt", gen.prompt, "Story prompt (prompt_only mode)");
  c_gen->add_option("--target-words", gen.target_words, "Chunk size for generated stories");
  c_gen->add_option("--job", gen.job, "Job state file; resumed when it exists");
  c_gen->add_option("--out", gen.out, "Output JSONL");
  c_gen->add_option("--workers", gen.workers, "Concurrent requests")->check(CLI::PositiveNumber);
  c_gen->add_option("--limit", gen.limit, "Stop after this many requests");
  c_gen->add_option("--record", gen.record, "Record live responses into this fixture file");

  BuildArgs build;
  auto* c_build = cli.add_subcommand("build-datasets", "Balance lengths and assemble a labelled dataset");
  c_build->add_option("--human", build.human, "Human excerpt JSONL files")->required();
  c_build->add_option("--ai", build.ai, "AI excerpt JSONL files")->required();
  c_build->add_option("--name", build.name, "Dataset name")->required();
  c_build->add_option("--out", build.out, "Output directory");
  c_build->add_flag("--no-balance", build.no_balance, "Skip length balancing");
  c_build->add_flag("--no-truncate", build.no_truncate, "Balance by outlier removal only");
  c_build->add_flag("--split", build.split, "Also write <name>Train, <name>Test and <name>Unseen");
  c_build->add_option("--pairing", build.pairing, "naive or pair_aware")
      ->check(CLI::IsMember({"naive", "pair_aware"}));

  TrainArgs train;
  auto* c_train = cli.add_subcommand("train", "Train and save a Naive Bayes or MLP model");
  c_train->add_option("--model", train.model, "nb or mlp")->check(CLI::IsMember({"nb", "naive_bayes", "mlp"}));
  c_train->add_option("--train", train.train, "Training JSONL files")->required();
  c_train->add_option("--out", train.out, "Model file");
  c_train->add_option("--alpha", train.alpha, "Naive Bayes smoothing")->check(CLI::PositiveNumber);
  c_train->add_option("--hidden", train.hidden, "MLP hidden units")->check(CLI::PositiveNumber);
  c_train->add_option("--max-epochs", train.max_epochs, "MLP epoch cap")->check(CLI::PositiveNumber);

  EvaluateArgs evaluate;
  auto* c_eval = cli.add_subcommand("evaluate", "Run an experiment manifest");
  c_eval->add_option("--manifest", evaluate.manifest, "Experiment manifest")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--csv", evaluate.csv, "CSV output path");

  ClassifyArgs classify;
  auto* c_classify = cli.add_subcommand("classify", "Classify one text");
  c_classify->add_option("--model", classify.model, "Model file");
  auto* text_opt = c_classify->add_option("--text", classify.text, "Text to classify");
  auto* file_opt = c_classify->add_option("--file", classify.file, "File holding the text");
  text_opt->excludes(file_opt);
  c_classify->require_option(1, 2);

  auto* c_quiz = cli.add_subcommand("quiz", "Human judge quizzes");
  c_quiz->require_subcommand(1);
  QuizExportArgs qexport;
  auto* c_qexport = c_quiz->add_subcommand("export", "Build a quiz and its answer key");
  c_qexport->add_option("--dataset", qexport.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  c_qexport->add_option("--size", qexport.size, "Items per quiz")->check(CLI::PositiveNumber);
  c_qexport->add_option("--out", qexport.out, "Quiz directory");
  c_qexport->add_option("--id", qexport.id, "Quiz id");
  QuizScoreArgs qscore;
  auto* c_qscore = c_quiz->add_subcommand("score", "Score one respondent");
  c_qscore->add_option("--quiz-dir", qscore.quiz_dir, "Quiz directory");
  c_qscore->add_option("--quiz", qscore.quiz, "Quiz id")->required();
  c_qscore->add_option("--respondent", qscore.respondent, "Respondent id")->required();
  c_qscore->add_option("--answers", qscore.answers, "JSON object item_id -> label")->required();
  c_qscore->add_option("--results", qscore.results, "Append the result to this JSONL store");
  QuizTTestArgs qttest;
  auto* c_qttest = c_quiz->add_subcommand("ttest", "One-tailed t-test of judge scores");
  c_qttest->add_option("--results", qttest.results, "Results JSONL");
  c_qttest->add_option("--quiz", qttest.quiz, "Only scores for this quiz");
  c_qttest->add_option("--scores", qttest.scores, "Comma-separated scores");
  c_qttest->add_option("--mu0", qttest.mu0, "Null mean in score points");
  c_qttest->add_option("--quiz-size", qttest.quiz_size, "Items per quiz")->check(CLI::PositiveNumber);

  ServeArgs serve;
  auto* c_serve = cli.add_subcommand("serve", "Run the HTTP service");
  c_serve->add_option("--model", serve.model, "Model file");
  c_serve->add_option("--quiz-dir", serve.quiz_dir, "Quiz directory");
  c_serve->add_option("--results", serve.results, "Judge results JSONL");
  c_serve->add_option("--bind", serve.bind, "Bind address");
  c_serve->add_option("--port", serve.port, "Port (0 picks a free one)");
  c_serve->add_option("--cors", serve.cors, "Allowed CORS origin");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return 2;
  }

  try {
    if (!g.config_path.empty()) g.config = app::load_app_config(g.config_path);
    if (c_ingest->parsed()) return run_ingest(g, ingest);
    if (c_gen->parsed()) return run_generate(g, gen);
    if (c_build->parsed()) return run_build(g, build);
    if (c_train->parsed()) return run_train(g, train);
    if (c_eval->parsed()) return run_evaluate(g, evaluate);
    if (c_classify->parsed()) return run_classify(g, classify);
    if (c_qexport->parsed()) return run_quiz_export(g, qexport);
    if (c_qscore->parsed()) return run_quiz_score(g, qscore);
    if (c_qttest->parsed()) return run_quiz_ttest(g, qttest);
    if (c_serve->parsed()) return run_serve(g, serve);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
