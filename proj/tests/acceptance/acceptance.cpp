// Acceptance checks. One line per criterion: PASS, FAIL, KNOWN-FAIL or BLOCKED.
//
//   acceptance                 every criterion; corpus ones run only when
//                              DETECTIVE_CORPUS_DIR is set
//   acceptance --corpus-only   only the corpus criteria; exits 77 without a corpus
//
// DETECTIVE_CORPUS_DIR must hold manifest.json (the six base novels) and
// rewrites.jsonl (one rewrite per human chunk, with source_excerpt_id set).

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "detective/corpus.hpp"
#include "detective/error.hpp"
#include "detective/eval.hpp"
#include "detective/features.hpp"
#include "detective/judges.hpp"
#include "detective/models/classifier.hpp"
#include "detective/models/mlp.hpp"
#include "detective/models/naive_bayes.hpp"
#include "detective/random.hpp"
#include "detective/text_util.hpp"
#include "synthetic.hpp"

using namespace detective;
using big = boost::multiprecision::cpp_bin_float_50;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, KnownFail, Blocked };

struct Outcome {
  Status status;
  std::string detail;
};

int g_unexpected_failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& e) {
    out = {Status::Fail, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const char* tag = out.status == Status::Pass        ? "PASS"
                    : out.status == Status::Fail      ? "FAIL"
                    : out.status == Status::KnownFail ? "FAIL (known)"
                                                      : "BLOCKED";
  if (out.status == Status::Fail) ++g_unexpected_failures;
  std::printf("[%s] %s: %s [%.2f s]\n", tag, name.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// ---------------------------------------------------------------- splits

Outcome split_counts() {
  eval::SplitSpec spec;
  struct Case {
    std::size_t n, train, test, validation;
  };
  const Case cases[] = {{2848, 1595, 683, 570}, {5426, 3038, 1302, 1086}};
  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    // Build a real dataset of N excerpts and split it, not just the arithmetic.
    Dataset ds;
    ds.name = "N" + std::to_string(c.n);
    for (std::size_t i = 0; i < c.n; ++i) {
      const auto id = ds.name + "-" + std::to_string(i);
      ds.excerpts.push_back(i % 2 ? make_excerpt(id, "Word.", Origin::PromptOnly)
                                  : make_excerpt(id, "Word.", Origin::NovelChunk));
    }
    spec.pairing_mode = eval::PairingMode::Naive;
    const auto s = eval::split_dataset(ds, spec);
    ok = ok && s.train.size() == c.train && s.test.size() == c.test && s.validation.size() == c.validation;
    detail += fmt("N=%zu -> %zu/%zu/%zu ", c.n, s.train.size(), s.test.size(), s.validation.size());
  }
  return {ok ? Status::Pass : Status::Fail, detail + "(exact)"};
}

// ---------------------------------------------------------------- naive Bayes

// Every count vector over V terms with total <= max_total.
void enumerate_docs(std::size_t V, std::uint32_t max_total, std::vector<std::uint32_t>& cur, std::size_t pos,
                    std::uint32_t used, std::vector<std::vector<std::uint32_t>>& out) {
  if (pos == V) {
    out.push_back(cur);
    return;
  }
  for (std::uint32_t k = 0; used + k <= max_total; ++k) {
    cur[pos] = k;
    enumerate_docs(V, max_total, cur, pos + 1, used + k, out);
  }
  cur[pos] = 0;
}

features::DocTermMatrix to_matrix(const std::vector<std::vector<std::uint32_t>>& dense, std::size_t V) {
  features::DocTermMatrix m(V);
  std::vector<features::TermCount> row;
  for (const auto& d : dense) {
    row.clear();
    for (std::uint32_t t = 0; t < V; ++t)
      if (d[t]) row.push_back({t, d[t]});
    m.append_row(row);
  }
  return m;
}

Outcome nb_oracle() {
  constexpr std::uint32_t kMaxTokens = 20;
  constexpr double kAlphas[] = {0.7, 1.0, 0.05};
  Rng rng(77);
  double worst = 0.0;
  std::size_t docs_checked = 0, label_mismatch = 0;
  for (std::size_t V = 1; V <= 5; ++V) {
    std::vector<std::vector<std::uint32_t>> docs;
    std::vector<std::uint32_t> cur(V, 0);
    enumerate_docs(V, kMaxTokens, cur, 0, 0, docs);
    const auto X_eval = to_matrix(docs, V);
    for (double alpha : kAlphas) {
      // A small random training set, both classes present.
      const std::size_t n = 2 + rng.index(7);
      std::vector<std::vector<std::uint32_t>> train(n, std::vector<std::uint32_t>(V, 0));
      std::vector<Label> y(n);
      for (std::size_t r = 0; r < n; ++r) {
        y[r] = r == 0 ? Label::Human : r == 1 ? Label::Ai : (rng.index(2) ? Label::Ai : Label::Human);
        const auto len = rng.index(kMaxTokens + 1);
        for (std::uint64_t k = 0; k < len; ++k) ++train[r][rng.index(V)];
      }
      const auto model = models::nb_train(to_matrix(train, V), y, alpha);
      const auto preds = models::nb_predict(model, X_eval);

      // Oracle parameters from raw counts in 50-digit arithmetic; powers of
      // theta tabulated once per class.
      big prior[2] = {0, 0}, total[2] = {0, 0};
      std::vector<big> cnt[2] = {std::vector<big>(V, 0), std::vector<big>(V, 0)};
      for (std::size_t r = 0; r < n; ++r) {
        const int c = static_cast<int>(y[r]);
        prior[c] += 1;
        for (std::size_t t = 0; t < V; ++t) {
          cnt[c][t] += train[r][t];
          total[c] += train[r][t];
        }
      }
      std::vector<std::vector<big>> powers[2];
      for (int c = 0; c < 2; ++c) {
        prior[c] /= big(n);
        powers[c].assign(V, std::vector<big>(kMaxTokens + 1));
        for (std::size_t t = 0; t < V; ++t) {
          const big theta = (cnt[c][t] + big(alpha)) / (total[c] + big(alpha) * big(V));
          powers[c][t][0] = 1;
          for (std::uint32_t k = 1; k <= kMaxTokens; ++k) powers[c][t][k] = powers[c][t][k - 1] * theta;
        }
      }
      for (std::size_t d = 0; d < docs.size(); ++d) {
        big joint[2] = {prior[0], prior[1]};
        for (int c = 0; c < 2; ++c)
          for (std::size_t t = 0; t < V; ++t) joint[c] *= powers[c][t][docs[d][t]];
        const double p_ai = big(joint[1] / (joint[0] + joint[1])).convert_to<double>();
        worst = std::max(worst, std::abs(p_ai - preds[d].score_ai));
        const Label expected = p_ai >= 0.5 ? Label::Ai : Label::Human;
        if (std::abs(p_ai - 0.5) > 1e-9 && expected != preds[d].label) ++label_mismatch;
        ++docs_checked;
      }
    }
  }
  const bool ok = worst <= 1e-9 && label_mismatch == 0;
  return {ok ? Status::Pass : Status::Fail,
          fmt("%zu documents, max |P(ai) - oracle| = %.3g, label mismatches %zu (tol 1e-9)", docs_checked, worst,
              label_mismatch)};
}

// ---------------------------------------------------------------- MLP

Outcome mlp_gradients() {
  double worst = 0.0;
  for (std::uint64_t batch = 0; batch < 20; ++batch) {
    Rng rng(1000 + batch);
    const std::size_t V = 5 + rng.index(20);
    const std::size_t rows = 3 + rng.index(10);
    features::DocTermMatrix X(V);
    std::vector<Label> y;
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<std::uint32_t> dense(V, 0);
      const auto len = 1 + rng.index(15);
      for (std::uint64_t k = 0; k < len; ++k) ++dense[rng.index(V)];
      std::vector<features::TermCount> row;
      for (std::uint32_t t = 0; t < V; ++t)
        if (dense[t]) row.push_back({t, dense[t]});
      X.append_row(row);
      y.push_back(r == 0 ? Label::Human : r == 1 ? Label::Ai : (rng.index(2) ? Label::Ai : Label::Human));
    }
    models::MlpConfig cfg;
    cfg.hidden_units = 2 + rng.index(8);
    cfg.l2 = 1e-4;
    cfg.seed = batch;
    models::GradientCheckOptions opt;
    opt.step = 1e-5;
    opt.max_params = 200;
    opt.sample_seed = batch + 1;
    worst = std::max(worst, models::mlp_gradient_check(cfg, X, y, opt));
  }
  return {worst <= 1e-4 ? Status::Pass : Status::Fail,
          fmt("20 batches, max relative error %.3g (tol 1e-4, h = 1e-5)", worst)};
}

// ---------------------------------------------------------------- runtime

Outcome runtime() {
  // 2713 pairs make N = 5426, whose training split has 3038 rows.
  const testing::TextSynth synth(31);
  const auto ds = testing::synthetic_dataset(synth, "RT", 2713, 32);
  eval::SplitSpec spec;
  spec.pairing_mode = eval::PairingMode::Naive;
  spec.seed = 42;
  const auto split = eval::split_dataset(ds, spec);
  const Dataset train{"RTTrain", split.train, 42, {}};
  const Dataset test{"RTTest", split.test, 42, {}};

  models::ModelSpec nb{"NB", models::ModelKind::NaiveBayes};
  nb.alpha = 0.7;
  auto t0 = std::chrono::steady_clock::now();
  const auto nb_model = eval::train_model(nb, train);
  const auto nb_row = eval::evaluate_model(nb_model, test);
  const double nb_secs = seconds_since(t0);

  models::ModelSpec mlp{"MLP", models::ModelKind::Mlp};
  mlp.mlp.hidden_units = 155;
  mlp.mlp.seed = 42;
  t0 = std::chrono::steady_clock::now();
  const auto mlp_model = eval::train_model(mlp, train);
  const auto mlp_row = eval::evaluate_model(mlp_model, test);
  const double mlp_secs = seconds_since(t0);

  const bool ok = nb_secs <= 10.0 && nb_secs < mlp_secs;
  return {ok ? Status::Pass : Status::Fail,
          fmt("train %zu rows: NB %.2f s (acc %.3f), MLP %.2f s (acc %.3f, %s 120 s, not gating)", train.excerpts.size(),
              nb_secs, nb_row.metrics.accuracy, mlp_secs, mlp_row.metrics.accuracy,
              mlp_secs <= 120.0 ? "within" : "over")};
}

// ---------------------------------------------------------------- t-test

Outcome human_study() {
  // 19 scores rescaled to mean 4.42 and sample sd 1.883 exactly.
  std::vector<double> scores = {2, 3, 4, 5, 6, 7, 4, 3, 5, 8, 1, 4, 6, 5, 3, 4, 7, 2, 5};
  const double n = static_cast<double>(scores.size());
  double m = 0;
  for (double s : scores) m += s;
  m /= n;
  double ss = 0;
  for (double s : scores) ss += (s - m) * (s - m);
  const double sd = std::sqrt(ss / (n - 1));
  for (double& s : scores) s = 4.42 + 1.883 * (s - m) / sd;

  const auto r = judges::t_test_upper(scores, 5.5, 10.0);

  // Independent oracle.
  const boost::math::students_t dist(18.0);
  const double se = 1.883 / std::sqrt(19.0);
  const double t_ref = (4.42 - 5.5) / se;
  const double p_ref = boost::math::cdf(dist, t_ref);
  const double ci_ref = 4.42 + boost::math::quantile(dist, 0.95) * se;
  const bool matches_oracle =
      std::abs(r.t - t_ref) < 1e-9 && std::abs(r.p_one_tailed - p_ref) < 1e-9 && std::abs(r.ci_upper_one_sided - ci_ref) < 1e-9;

  const bool t_ok = std::abs(r.t + 2.50) <= 0.01 && r.df == 18.0;
  const bool p_ok = std::abs(r.p_one_tailed - 0.010) <= 0.002;
  const bool ci_ok = std::abs(r.ci_upper_one_sided - 5.20) <= 0.02;
  const auto detail = fmt("t(%g) = %.4f, p = %.4f, upper bound %.3f (%.1f%%); oracle %s; bound target 5.20 +/- 0.02",
                          r.df, r.t, r.p_one_tailed, r.ci_upper_one_sided, 100.0 * r.as_proportion,
                          matches_oracle ? "agrees" : "DISAGREES");
  if (!matches_oracle || !t_ok || !p_ok) return {Status::Fail, detail};
  // With this mean and sd the bound is 4.42 + 1.734 * 1.883 / sqrt(19) = 5.169,
  // so the bound target cannot be met together with the t and p targets.
  return {ci_ok ? Status::Pass : Status::KnownFail, detail};
}

// ---------------------------------------------------------------- manifests

Outcome table_manifests() {
  const fs::path dir = fs::path(DETECTIVE_SOURCE_DIR) / "data" / "manifests";
  std::string detail;
  bool ok = true;
  for (int t = 2; t <= 5; ++t) {
    const auto path = dir / fmt("table%d.json", t);
    try {
      const auto j = nlohmann::json::parse(read_file(path));
      // Each manifest must at least name its models and evaluation datasets.
      for (const auto& m : j.at("models")) eval::model_spec_from_json(m, 42);
      detail += fmt("table%d: %zu models, %zu eval sets; ", t, j.at("models").size(), j.at("eval_datasets").size());
    } catch (const std::exception& e) {
      ok = false;
      detail += fmt("table%d: %s; ", t, e.what());
    }
  }
  return {ok ? Status::Pass : Status::Fail,
          detail + "numeric reproduction needs live generation and is not claimed"};
}

// ---------------------------------------------------------------- corpus

const char* const kBase3[] = {"The Murder on the Links", "Poirot Investigates", "The Man in the Brown Suit"};
const char* const kExtra3[] = {"The Mysterious Affair at Styles", "The Big Four", "The Secret Adversary"};

struct Corpus {
  std::map<std::string, std::vector<Excerpt>> chunks_by_title;
  std::vector<Excerpt> rewrites;
  double chunk_seconds = 0.0;

  std::vector<Excerpt> human(bool six) const {
    std::vector<Excerpt> out;
    auto add = [&](const char* title) {
      const auto& c = chunks_by_title.at(title);
      out.insert(out.end(), c.begin(), c.end());
    };
    for (auto t : kBase3) add(t);
    if (six)
      for (auto t : kExtra3) add(t);
    return out;
  }

  std::vector<Excerpt> rewrites_of(const std::vector<Excerpt>& human) const {
    std::set<std::string> ids;
    for (const auto& h : human) ids.insert(h.excerpt_id);
    std::vector<Excerpt> out;
    for (const auto& r : rewrites)
      if (r.source_excerpt_id && ids.count(*r.source_excerpt_id)) out.push_back(r);
    return out;
  }
};

Corpus load_corpus(const fs::path& dir) {
  Corpus c;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& entry : corpus::load_manifest(dir / "manifest.json")) {
    const auto raw = corpus::load_book(entry);
    c.chunks_by_title[entry.title] = corpus::chunk_text(entry.book_id, corpus::strip_boilerplate(raw), 100);
  }
  c.chunk_seconds = seconds_since(t0);
  for (const char* t : kBase3)
    if (!c.chunks_by_title.count(t)) throw Error(ErrorCode::InvalidArgument, std::string("manifest lacks ") + t);
  for (const char* t : kExtra3)
    if (!c.chunks_by_title.count(t)) throw Error(ErrorCode::InvalidArgument, std::string("manifest lacks ") + t);
  std::ifstream in(dir / "rewrites.jsonl");
  if (!in) throw Error(ErrorCode::Io, "cannot open rewrites.jsonl");
  c.rewrites = read_jsonl(in);
  return c;
}

Outcome chunk_counts(const Corpus& c) {
  const double n3 = static_cast<double>(c.human(false).size());
  const double n6 = static_cast<double>(c.human(true).size());
  const bool ok = std::abs(n3 - 1424) <= 0.05 * 1424 && std::abs(n6 - 2713) <= 0.05 * 2713 && c.chunk_seconds < 10.0;
  return {ok ? Status::Pass : Status::Fail,
          fmt("three novels %g (target 1424 +/- 5%%), six novels %g (target 2713 +/- 5%%), chunking %.2f s", n3, n6,
              c.chunk_seconds)};
}

Outcome real_balancing(const Corpus& c) {
  const auto human = c.human(false);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = corpus::balance_lengths(human, c.rewrites_of(human), 42);
  const double secs = seconds_since(t0);
  const auto& h = r.human_after;
  const auto& a = r.ai_after;
  const double ratio = std::max(h.std_chars, a.std_chars) / std::max(1e-9, std::min(h.std_chars, a.std_chars));
  const bool ok = std::abs(h.mean_chars - a.mean_chars) <= 5.0 && ratio <= 1.5 && std::abs(h.mean_chars - 563) <= 5 &&
                  std::abs(a.mean_chars - 563) <= 5 && std::abs(h.std_chars - 61) <= 15 &&
                  std::abs(a.std_chars - 81) <= 15 && secs < 5.0;
  return {ok ? Status::Pass : Status::Fail,
          fmt("human mean %.1f sd %.1f, ai mean %.1f sd %.1f, sd ratio %.2f (targets 563, 61 vs 81)", h.mean_chars,
              h.std_chars, a.mean_chars, a.std_chars, ratio)};
}

struct Ac6 {
  Dataset train, test, unseen;
};

Ac6 build_ac6(const Corpus& c) {
  const auto human = c.human(true);
  const auto bal = corpus::balance_lengths(human, c.rewrites_of(human), 42);
  const auto ds = corpus::assemble_dataset("AC6", bal.human, bal.ai, 42);
  eval::SplitSpec spec;
  spec.seed = 42;
  spec.pairing_mode = eval::PairingMode::Naive;
  const auto s = eval::split_dataset(ds, spec);
  return {{"AC6Train", s.train, 42, {}}, {"AC6Test", s.test, 42, {}}, {"AC6Unseen", s.validation, 42, {}}};
}

Outcome e2e_quality(const Ac6& d) {
  models::ModelSpec nb{"NB", models::ModelKind::NaiveBayes};
  nb.alpha = 0.7;
  models::ModelSpec mlp{"MLP", models::ModelKind::Mlp};
  mlp.mlp.hidden_units = 155;
  mlp.mlp.seed = 42;
  std::string detail;
  bool ok = true;
  for (const auto& spec : {nb, mlp}) {
    const auto m = eval::train_model(spec, d.train);
    for (const auto* ds : {&d.test, &d.unseen}) {
      const auto row = eval::evaluate_model(m, *ds);
      ok = ok && row.metrics.accuracy >= 0.90 && row.metrics.f1 >= 0.90;
      detail += fmt("%s@%s acc %.3f f1 %.3f; ", spec.name.c_str(), ds->name.c_str(), row.metrics.accuracy,
                    row.metrics.f1);
    }
  }
  return {ok ? Status::Pass : Status::Fail, detail + "(min 0.90)"};
}

Outcome table2_ordering(const Ac6& d) {
  std::vector<std::pair<std::string, double>> acc;
  for (auto kind : {models::ModelKind::NaiveBayes, models::ModelKind::Mlp, models::ModelKind::LogisticRegression,
                    models::ModelKind::LinearSvm, models::ModelKind::DecisionTree, models::ModelKind::RandomForest}) {
    models::ModelSpec spec{std::string(models::to_string(kind)), kind};
    spec.mlp.seed = 42;
    const auto m = eval::train_model(spec, d.train);
    acc.emplace_back(spec.name, eval::evaluate_model(m, d.test).metrics.accuracy);
  }
  auto sorted = acc;
  std::stable_sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.second > b.second; });
  const bool tree_worst = sorted.back().first == models::to_string(models::ModelKind::DecisionTree) &&
                          sorted[sorted.size() - 2].second > sorted.back().second;
  std::set<std::string> top2 = {sorted[0].first, sorted[1].first};
  const bool nb_mlp_top = top2.count(std::string(models::to_string(models::ModelKind::NaiveBayes))) &&
                          top2.count(std::string(models::to_string(models::ModelKind::Mlp)));
  std::string detail;
  for (const auto& [name, a] : sorted) detail += fmt("%s %.3f; ", name.c_str(), a);
  return {tree_worst && nb_mlp_top ? Status::Pass : Status::Fail, detail};
}

void corpus_criteria(bool have_corpus, const fs::path& dir) {
  const char* names[] = {"Chunk counts", "Length balancing on real data", "End-to-end detection quality",
                         "Table 2 ordering"};
  if (!have_corpus) {
    for (auto n : names)
      report(n, [] { return Outcome{Status::Blocked, "needs the Gutenberg corpus and rewrites; set DETECTIVE_CORPUS_DIR"}; });
    return;
  }
  const Corpus c = load_corpus(dir);
  report(names[0], [&] { return chunk_counts(c); });
  report(names[1], [&] { return real_balancing(c); });
  const Ac6 d = build_ac6(c);
  report(names[2], [&] { return e2e_quality(d); });
  report(names[3], [&] { return table2_ordering(d); });
}

}  // namespace

int main(int argc, char** argv) {
  const bool corpus_only = argc > 1 && std::string(argv[1]) == "--corpus-only";
  const char* env = std::getenv("DETECTIVE_CORPUS_DIR");
  const bool have_corpus = env && *env && fs::exists(fs::path(env) / "manifest.json");

  if (corpus_only) {
    if (!have_corpus) {
      std::printf("DETECTIVE_CORPUS_DIR not set; corpus criteria skipped\n");
      return 77;
    }
    corpus_criteria(true, env);
    return g_unexpected_failures ? 1 : 0;
  }

  report("Split arithmetic", split_counts);
  corpus_criteria(have_corpus, have_corpus ? fs::path(env) : fs::path());
  report("NB oracle equivalence", nb_oracle);
  report("MLP gradient check", mlp_gradients);
  report("Runtime", runtime);
  report("Human-study statistics", human_study);
  report("Table manifests", table_manifests);
  std::printf("%d unexpected failure(s)\n", g_unexpected_failures);
  return g_unexpected_failures ? 1 : 0;
}
