#include "detective/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "detective/error.hpp"
#include "detective/random.hpp"
#include "detective/text_util.hpp"

namespace detective::eval {

using nlohmann::json;

std::string_view to_string(PairingMode mode) noexcept {
  return mode == PairingMode::PairAware ? "pair_aware" : "naive";
}

PairingMode parse_pairing_mode(std::string_view s) {
  if (s == "pair_aware") return PairingMode::PairAware;
  if (s == "naive") return PairingMode::Naive;
  throw Error(ErrorCode::InvalidArgument, "unknown pairing_mode '" + std::string(s) + "'");
}

std::string_view to_string(DatasetRelation r) noexcept {
  switch (r) {
    case DatasetRelation::InDistribution: return "in_distribution";
    case DatasetRelation::SameAuthor: return "same_author";
    case DatasetRelation::CrossAuthor: return "cross_author";
  }
  return "unknown";
}

DatasetRelation parse_dataset_relation(std::string_view s) {
  if (s == "in_distribution") return DatasetRelation::InDistribution;
  if (s == "same_author") return DatasetRelation::SameAuthor;
  if (s == "cross_author") return DatasetRelation::CrossAuthor;
  throw Error(ErrorCode::InvalidArgument, "unknown dataset kind '" + std::string(s) + "'");
}

namespace {

constexpr std::uint64_t kDenominator = 1'000'000;

std::uint64_t to_micro(double fraction, const char* name) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be in (0, 1)");
  }
  return static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(kDenominator)));
}

// Merges several shuffled buckets so that every prefix holds each bucket in
// proportion to its size (to within one item). Ties go to the lower bucket.
std::vector<std::size_t> proportional_merge(const std::vector<std::vector<std::size_t>>& buckets) {
  std::vector<std::size_t> next(buckets.size(), 0);
  std::size_t total = 0;
  for (const auto& b : buckets) total += b.size();
  std::vector<std::size_t> out;
  out.reserve(total);
  while (out.size() < total) {
    std::size_t best = buckets.size();
    for (std::size_t b = 0; b < buckets.size(); ++b) {
      if (next[b] >= buckets[b].size()) continue;
      if (best == buckets.size()) {
        best = b;
        continue;
      }
      // Compare (next[b] + 0.5) / size[b] with (next[best] + 0.5) / size[best] exactly.
      const auto lhs = (2 * next[b] + 1) * buckets[best].size();
      const auto rhs = (2 * next[best] + 1) * buckets[b].size();
      if (lhs < rhs) best = b;
    }
    out.push_back(buckets[best][next[best]++]);
  }
  return out;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

std::vector<std::vector<std::size_t>> pair_groups(const std::vector<Excerpt>& excerpts) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < excerpts.size(); ++i) by_id.emplace(excerpts[i].excerpt_id, i);
  std::vector<std::size_t> parent(excerpts.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < excerpts.size(); ++i) {
    if (!excerpts[i].source_excerpt_id) continue;
    auto it = by_id.find(*excerpts[i].source_excerpt_id);
    if (it == by_id.end()) continue;
    const auto a = find_root(parent, i);
    const auto b = find_root(parent, it->second);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < excerpts.size(); ++i) groups[find_root(parent, i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(groups.size());
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

double whole_seconds(double s) { return std::round(s); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  const auto holdout = to_micro(spec.holdout_fraction, "holdout_fraction");
  const auto test = to_micro(spec.test_fraction_of_pool, "test_fraction_of_pool");
  SplitSizes s;
  s.pool = static_cast<std::size_t>(static_cast<std::uint64_t>(n) * (kDenominator - holdout) / kDenominator);
  const auto train_scaled = static_cast<std::uint64_t>(s.pool) * (kDenominator - test);
  s.train = static_cast<std::size_t>((2 * train_scaled + kDenominator) / (2 * kDenominator));
  s.test = s.pool - s.train;
  s.validation = n - s.pool;
  return s;
}

Split split_dataset(const Dataset& ds, const SplitSpec& spec) {
  const auto& ex = ds.excerpts;
  const auto sizes = split_sizes(ex.size(), spec);
  if (sizes.train == 0 || sizes.test == 0 || sizes.validation == 0) {
    throw Error(ErrorCode::TooSmall, "dataset '" + ds.name + "' of " + std::to_string(ex.size()) +
                                         " excerpts leaves a split empty");
  }
  Rng rng(spec.seed);

  // Units are single excerpts (naive) or rewrite/source groups (pair_aware),
  // bucketed by label composition for stratification.
  std::vector<std::vector<std::size_t>> units;
  if (spec.pairing_mode == PairingMode::Naive) {
    for (std::size_t i = 0; i < ex.size(); ++i) units.push_back({i});
  } else {
    units = pair_groups(ex);
  }
  std::vector<std::vector<std::size_t>> buckets(3);
  for (std::size_t u = 0; u < units.size(); ++u) {
    bool human = false, ai = false;
    for (auto i : units[u]) (ex[i].label == Label::Human ? human : ai) = true;
    buckets[human && ai ? 0 : (human ? 1 : 2)].push_back(u);
  }
  for (auto& b : buckets) rng.shuffle(b);

  Split out;
  std::size_t position = 0;
  for (auto u : proportional_merge(buckets)) {
    auto& target = position < sizes.train ? out.train
                   : position < sizes.train + sizes.test ? out.test
                                                         : out.validation;
    for (auto i : units[u]) target.push_back(ex[i]);
    position += units[u].size();
  }
  if (out.train.empty() || out.test.empty() || out.validation.empty()) {
    throw Error(ErrorCode::TooSmall, "dataset '" + ds.name + "' leaves a split empty after pairing");
  }
  return out;
}

MetricsSummary summarize(const ConfusionMatrix& cm) {
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  MetricsSummary m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

Metrics compute_metrics(std::span<const Label> y_true, std::span<const Label> y_pred) {
  if (y_true.size() != y_pred.size()) throw Error(ErrorCode::InvalidArgument, "label vectors differ in length");
  if (y_true.empty()) throw Error(ErrorCode::InvalidArgument, "no labels to score");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool truth = y_true[i] == Label::Ai;
    const bool guess = y_pred[i] == Label::Ai;
    if (truth && guess) ++cm.tp;
    else if (!truth && guess) ++cm.fp;
    else if (truth) ++cm.fn;
    else ++cm.tn;
  }
  return {summarize(cm), cm};
}

std::string EvalReport::to_csv() const {
  std::string out = "dataset,model,accuracy,precision,recall,f1,train_s,predict_s\n";
  char buf[160];
  for (const auto& r : rows) {
    out += r.dataset + "," + r.model + ",";
    if (r.failed) {
      out += "failed,failed,failed,failed,,\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.4f,%.4f,%.0f,%.0f\n", r.metrics.accuracy, r.metrics.precision,
                  r.metrics.recall, r.metrics.f1, r.train_seconds, r.predict_seconds);
    out += buf;
  }
  return out;
}

std::string EvalReport::to_table() const {
  std::size_t wd = 7, wm = 5;
  for (const auto& r : rows) {
    wd = std::max(wd, r.dataset.size());
    wm = std::max(wm, r.model.size());
  }
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %-*s  %-15s  %8s  %9s  %6s  %6s  %7s  %9s\n", static_cast<int>(wd), "Dataset",
                static_cast<int>(wm), "Model", "Kind", "Accuracy", "Precision", "Recall", "F1", "Train s", "Predict s");
  os << buf;
  for (const auto& r : rows) {
    if (r.failed) {
      std::snprintf(buf, sizeof buf, "%-*s  %-*s  %-15s  FAILED: ", static_cast<int>(wd), r.dataset.c_str(),
                    static_cast<int>(wm), r.model.c_str(), std::string(to_string(r.relation)).c_str());
      os << buf << r.error << '\n';
      continue;
    }
    std::snprintf(buf, sizeof buf, "%-*s  %-*s  %-15s  %7.2f%%  %8.2f%%  %5.2f%%  %5.2f%%  %7.0f  %9.0f\n",
                  static_cast<int>(wd), r.dataset.c_str(), static_cast<int>(wm), r.model.c_str(),
                  std::string(to_string(r.relation)).c_str(), 100 * r.metrics.accuracy, 100 * r.metrics.precision,
                  100 * r.metrics.recall, 100 * r.metrics.f1, r.train_seconds, r.predict_seconds);
    os << buf;
  }
  return os.str();
}

const EvalRow* EvalReport::find(std::string_view dataset, std::string_view model) const {
  for (const auto& r : rows) {
    if (r.dataset == dataset && r.model == model) return &r;
  }
  return nullptr;
}

TrainedModel train_model(const models::ModelSpec& spec, const Dataset& training) {
  if (training.excerpts.empty()) throw Error(ErrorCode::TooSmall, "training set '" + training.name + "' is empty");
  TrainedModel tm;
  tm.name = spec.name.empty() ? std::string(models::to_string(spec.kind)) : spec.name;
  tm.training_set = training.name;
  const auto start = std::chrono::steady_clock::now();
  const auto texts = models::texts_of(training.excerpts);
  const auto y = models::labels_of(training.excerpts);
  tm.vocab = features::build_vocabulary(texts);
  const auto X = features::vectorize(texts, tm.vocab);
  auto clf = models::make_classifier(spec);
  clf->fit(X, y);
  tm.train_seconds = seconds_since(start);
  tm.classifier = std::move(clf);
  return tm;
}

EvalRow evaluate_model(const TrainedModel& model, const Dataset& dataset, DatasetRelation relation) {
  EvalRow row;
  row.dataset = dataset.name;
  row.model = model.name;
  row.relation = relation;
  row.train_seconds = whole_seconds(model.train_seconds);
  if (dataset.excerpts.empty()) throw Error(ErrorCode::TooSmall, "dataset '" + dataset.name + "' is empty");
  const auto start = std::chrono::steady_clock::now();
  const auto X = features::vectorize(models::texts_of(dataset.excerpts), model.vocab);
  const auto predictions = model.classifier->predict(X);
  row.predict_seconds = whole_seconds(seconds_since(start));
  const auto y_true = models::labels_of(dataset.excerpts);
  const auto y_pred = models::labels_of(predictions);
  const auto m = compute_metrics(y_true, y_pred);
  row.metrics = m.summary;
  row.confusion = m.confusion;
  return row;
}

namespace {

EvalRow failed_row(std::string dataset, std::string model, DatasetRelation relation, std::string error) {
  EvalRow row;
  row.dataset = std::move(dataset);
  row.model = std::move(model);
  row.relation = relation;
  row.failed = true;
  row.error = std::move(error);
  return row;
}

std::string display_name(const TrainedModel& m, bool qualify) {
  return qualify ? m.name + "@" + m.training_set : m.name;
}

}  // namespace

EvalReport generalisation_run(std::span<const TrainedModel> trained, std::span<const UnseenDataset> unseen) {
  bool qualify = false;
  for (const auto& m : trained) qualify |= m.training_set != trained.front().training_set;
  EvalReport report;
  for (const auto& u : unseen) {
    for (const auto& m : trained) {
      try {
        auto row = evaluate_model(m, u.dataset, u.relation);
        row.model = display_name(m, qualify);
        report.rows.push_back(std::move(row));
      } catch (const std::exception& e) {
        report.rows.push_back(failed_row(u.dataset.name, display_name(m, qualify), u.relation, e.what()));
      }
    }
  }
  return report;
}

models::ModelSpec model_spec_from_json(const json& j, std::uint64_t default_seed) {
  try {
    models::ModelSpec s;
    s.kind = models::parse_model_kind(j.at("kind").get<std::string>());
    s.name = j.value("name", std::string(models::to_string(s.kind)));
    const auto seed = j.value("seed", default_seed);
    s.alpha = j.value("alpha", s.alpha);
    s.mlp.hidden_units = j.value("hidden_units", s.mlp.hidden_units);
    s.mlp.learning_rate = j.value("learning_rate", s.mlp.learning_rate);
    s.mlp.l2 = j.value("l2", s.mlp.l2);
    s.mlp.batch_size = j.value("batch_size", s.mlp.batch_size);
    s.mlp.max_epochs = j.value("max_epochs", s.mlp.max_epochs);
    s.mlp.tol = j.value("tol", s.mlp.tol);
    s.mlp.n_iter_no_change = j.value("n_iter_no_change", s.mlp.n_iter_no_change);
    s.mlp.seed = seed;
    s.linear.c = j.value("c", s.linear.c);
    s.linear.epochs = j.value("epochs", s.linear.epochs);
    s.linear.seed = seed;
    s.tree.max_depth = j.value("max_depth", s.tree.max_depth);
    s.tree.seed = seed;
    s.forest.n_trees = j.value("n_trees", s.forest.n_trees);
    s.forest.max_features = j.value("max_features", s.forest.max_features);
    s.forest.seed = seed;
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("model entry: ") + e.what());
  }
}

namespace {

class DatasetResolver {
 public:
  DatasetResolver(const json& manifest, std::filesystem::path base_dir) : base_dir_(std::move(base_dir)) {
    seed_ = manifest.value("seed", std::uint64_t{0});
    if (manifest.contains("split")) {
      const auto& s = manifest.at("split");
      split_.holdout_fraction = s.value("holdout_fraction", split_.holdout_fraction);
      split_.test_fraction_of_pool = s.value("test_fraction_of_pool", split_.test_fraction_of_pool);
      split_.pairing_mode = parse_pairing_mode(s.value("pairing_mode", "pair_aware"));
      split_.seed = s.value("seed", seed_);
    } else {
      split_.seed = seed_;
    }
    for (const auto& d : manifest.value("datasets", json::array())) {
      entries_[d.at("name").get<std::string>()] = d;
    }
  }

  const Dataset& get(const std::string& name) {
    if (auto it = loaded_.find(name); it != loaded_.end()) return it->second;
    auto it = entries_.find(name);
    if (it == entries_.end()) throw Error(ErrorCode::InvalidArgument, "unknown dataset '" + name + "'");
    const auto& entry = it->second;
    Dataset ds;
    if (entry.contains("path")) {
      ds = load_dataset(base_dir_ / entry.at("path").get<std::string>());
    } else if (entry.contains("split_of")) {
      const auto parent = entry.at("split_of").get<std::string>();
      const auto& split = split_of(parent);
      const auto part = entry.at("part").get<std::string>();
      if (part == "train") ds.excerpts = split.train;
      else if (part == "test") ds.excerpts = split.test;
      else if (part == "validation" || part == "unseen") ds.excerpts = split.validation;
      else throw Error(ErrorCode::InvalidArgument, "unknown split part '" + part + "'");
    } else {
      throw Error(ErrorCode::Parse, "dataset '" + name + "' needs either path or split_of");
    }
    ds.name = name;
    return loaded_.emplace(name, std::move(ds)).first->second;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  const Split& split_of(const std::string& parent) {
    if (auto it = splits_.find(parent); it != splits_.end()) return it->second;
    return splits_.emplace(parent, split_dataset(get(parent), split_)).first->second;
  }

  std::filesystem::path base_dir_;
  std::uint64_t seed_ = 0;
  SplitSpec split_;
  std::map<std::string, json> entries_;
  std::map<std::string, Dataset> loaded_;
  std::map<std::string, Split> splits_;
};

struct EvalTarget {
  std::string name;
  DatasetRelation relation = DatasetRelation::InDistribution;
};

EvalTarget eval_target_from_json(const json& j) {
  if (j.is_string()) return {j.get<std::string>(), DatasetRelation::InDistribution};
  return {j.at("name").get<std::string>(), parse_dataset_relation(j.value("kind", "in_distribution"))};
}

std::vector<std::string> names_of(const json& arr) {
  std::vector<std::string> out;
  for (const auto& v : arr) out.push_back(v.is_string() ? v.get<std::string>() : v.at("name").get<std::string>());
  return out;
}

}  // namespace

EvalReport run_experiment(const json& manifest, const std::filesystem::path& base_dir) {
  if (!manifest.is_object()) throw Error(ErrorCode::Parse, "experiment manifest must be a JSON object");
  struct Run {
    std::string training_set;
    std::vector<std::string> models;
    std::vector<EvalTarget> targets;
  };
  std::vector<models::ModelSpec> specs;
  std::map<std::string, EvalTarget> declared_targets;
  std::vector<Run> runs;
  DatasetResolver resolver(manifest, base_dir);
  try {
    for (const auto& m : manifest.at("models")) specs.push_back(model_spec_from_json(m, resolver.seed()));
    std::vector<EvalTarget> all_targets;
    for (const auto& d : manifest.at("eval_datasets")) {
      all_targets.push_back(eval_target_from_json(d));
      declared_targets[all_targets.back().name] = all_targets.back();
    }
    if (manifest.contains("runs")) {
      for (const auto& r : manifest.at("runs")) {
        Run run;
        run.training_set = r.at("training_set").get<std::string>();
        run.models = r.contains("models") ? names_of(r.at("models")) : std::vector<std::string>{};
        if (run.models.empty()) {
          for (const auto& s : specs) run.models.push_back(s.name);
        }
        if (r.contains("eval_datasets")) {
          for (const auto& d : r.at("eval_datasets")) {
            auto t = eval_target_from_json(d);
            if (d.is_string()) {
              if (auto it = declared_targets.find(t.name); it != declared_targets.end()) t = it->second;
            }
            run.targets.push_back(t);
          }
        } else {
          run.targets = all_targets;
        }
        runs.push_back(std::move(run));
      }
    } else {
      for (const auto& t : names_of(manifest.at("training_sets"))) {
        Run run{t, {}, all_targets};
        for (const auto& s : specs) run.models.push_back(s.name);
        runs.push_back(std::move(run));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("experiment manifest: ") + e.what());
  }

  bool qualify = false;
  for (const auto& r : runs) qualify |= r.training_set != runs.front().training_set;

  EvalReport report;
  for (const auto& run : runs) {
    struct Slot {
      std::string display;
      std::optional<TrainedModel> model;
      std::string error;
    };
    std::vector<Slot> slots;
    for (const auto& model_name : run.models) {
      Slot slot;
      slot.display = qualify ? model_name + "@" + run.training_set : model_name;
      try {
        auto spec = std::find_if(specs.begin(), specs.end(), [&](const auto& s) { return s.name == model_name; });
        if (spec == specs.end()) throw Error(ErrorCode::InvalidArgument, "unknown model '" + model_name + "'");
        slot.model = train_model(*spec, resolver.get(run.training_set));
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
      slots.push_back(std::move(slot));
    }
    for (const auto& target : run.targets) {
      for (const auto& slot : slots) {
        if (!slot.model) {
          report.rows.push_back(failed_row(target.name, slot.display, target.relation, slot.error));
          continue;
        }
        try {
          auto row = evaluate_model(*slot.model, resolver.get(target.name), target.relation);
          row.model = slot.display;
          report.rows.push_back(std::move(row));
        } catch (const std::exception& e) {
          report.rows.push_back(failed_row(target.name, slot.display, target.relation, e.what()));
        }
      }
    }
  }
  return report;
}

EvalReport run_experiment(const std::filesystem::path& manifest_path) {
  auto j = json::parse(read_file(manifest_path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Parse, manifest_path.string() + " is not valid JSON");
  return run_experiment(j, manifest_path.parent_path());
}

}  // namespace detective::eval
