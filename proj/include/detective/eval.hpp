#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "detective/excerpt.hpp"
#include "detective/features.hpp"
#include "detective/models/classifier.hpp"

namespace detective::eval {

enum class PairingMode { PairAware, Naive };

std::string_view to_string(PairingMode mode) noexcept;
PairingMode parse_pairing_mode(std::string_view s);

struct SplitSpec {
  double holdout_fraction = 0.2;
  double test_fraction_of_pool = 0.3;
  std::uint64_t seed = 0;
  PairingMode pairing_mode = PairingMode::PairAware;
};

struct SplitSizes {
  std::size_t pool = 0;
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t validation = 0;
};

/// pool = floor((1 - holdout) N), train = round((1 - test) pool) with halves
/// rounded up. Fractions are taken to six decimals so the result does not
/// depend on binary rounding of the inputs.
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

struct Split {
  std::vector<Excerpt> train;
  std::vector<Excerpt> test;
  std::vector<Excerpt> validation;
};

/// Stratified random split. Naive mode hits split_sizes exactly. Pair-aware
/// mode keeps each rewrite with its source, so a split may overshoot its
/// target by one. Throws TooSmall when a split would be empty.
Split split_dataset(const Dataset& ds, const SplitSpec& spec);

/// Positive class is ai.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricsSummary {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Metrics {
  MetricsSummary summary;
  ConfusionMatrix confusion;
};

/// Ratios with a zero denominator are reported as 0.
Metrics compute_metrics(std::span<const Label> y_true, std::span<const Label> y_pred);
MetricsSummary summarize(const ConfusionMatrix& cm);

enum class DatasetRelation { InDistribution, SameAuthor, CrossAuthor };

std::string_view to_string(DatasetRelation r) noexcept;
DatasetRelation parse_dataset_relation(std::string_view s);

struct EvalRow {
  std::string dataset;
  std::string model;
  DatasetRelation relation = DatasetRelation::InDistribution;
  MetricsSummary metrics;
  ConfusionMatrix confusion;
  double train_seconds = 0.0;  // whole seconds
  double predict_seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  /// Columns: dataset, model, accuracy, precision, recall, f1, train_s,
  /// predict_s. Metric cells of failed rows hold "failed".
  std::string to_csv() const;
  std::string to_table() const;
  const EvalRow* find(std::string_view dataset, std::string_view model) const;
};

/// A classifier fitted on one training set, with the vocabulary it was
/// vectorized against.
struct TrainedModel {
  std::string name;
  std::string training_set;
  features::Vocabulary vocab;
  std::shared_ptr<const models::Classifier> classifier;
  double train_seconds = 0.0;
};

TrainedModel train_model(const models::ModelSpec& spec, const Dataset& training);

EvalRow evaluate_model(const TrainedModel& model, const Dataset& dataset,
                       DatasetRelation relation = DatasetRelation::InDistribution);

struct UnseenDataset {
  Dataset dataset;
  DatasetRelation relation = DatasetRelation::SameAuthor;
};

/// Evaluates every model on every unseen dataset. Model names are suffixed
/// with "@<training set>" when the models come from more than one training set.
EvalReport generalisation_run(std::span<const TrainedModel> trained, std::span<const UnseenDataset> unseen);

/// Parses a model entry such as {"name": "NB", "kind": "naive_bayes", "alpha": 0.7}.
models::ModelSpec model_spec_from_json(const nlohmann::json& j, std::uint64_t default_seed);

/// Runs an experiment manifest:
///   {"seed": 42,
///    "split": {"holdout_fraction": 0.2, "test_fraction_of_pool": 0.3, "pairing_mode": "naive"},
///    "datasets": [{"name": "AC3", "path": "AC3.jsonl"},
///                 {"name": "AC3Train", "split_of": "AC3", "part": "train"}, ...],
///    "training_sets": ["AC3Train"],
///    "models": [{"name": "NB", "kind": "naive_bayes", "alpha": 0.7}, ...],
///    "eval_datasets": [{"name": "AC3Test", "kind": "in_distribution"}, ...],
///    "runs": [{"training_set": "AC3Train", "models": ["NB"], "eval_datasets": ["AC3Test"]}]}
/// Paths are resolved against base_dir. Without "runs" every model is trained
/// on every training set and evaluated on every eval dataset. A row whose
/// dataset or model fails is marked failed and the run continues.
EvalReport run_experiment(const nlohmann::json& manifest, const std::filesystem::path& base_dir);
EvalReport run_experiment(const std::filesystem::path& manifest_path);

}  // namespace detective::eval
