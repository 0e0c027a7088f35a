#include "detective/models/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "detective/error.hpp"
#include "detective/random.hpp"

namespace detective::models {

using features::DocTermMatrix;
using features::TermCount;

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double margin(const LinearModel& m, std::span<const TermCount> row) {
  double z = m.bias;
  for (const auto& e : row) z += e.count * m.weights[e.index];
  return z;
}

std::uint32_t count_in_row(std::span<const TermCount> row, std::uint32_t feature) {
  auto it = std::lower_bound(row.begin(), row.end(), feature,
                             [](const TermCount& e, std::uint32_t f) { return e.index < f; });
  return it != row.end() && it->index == feature ? it->count : 0;
}

}  // namespace

std::string_view to_string(BaselineKind kind) noexcept {
  switch (kind) {
    case BaselineKind::LogisticRegression: return "logistic_regression";
    case BaselineKind::LinearSvm: return "linear_svm";
    case BaselineKind::DecisionTree: return "decision_tree";
    case BaselineKind::RandomForest: return "random_forest";
  }
  return "unknown";
}

LinearModel linear_train(const DocTermMatrix& X, std::span<const Label> y, LinearLoss loss,
                         const LinearConfig& config) {
  check_training_labels(X.rows(), y);
  if (!(config.c > 0.0) || config.epochs < 1 || config.batch_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "invalid linear model configuration");
  }
  const std::size_t n = X.rows();
  const std::size_t V = X.cols();
  LinearModel m;
  m.loss = loss;
  m.weights.assign(V, 0.0);

  // Adam on (1/n)·Σ loss + ||w||² / (2·C·n).
  std::vector<double> grad(V, 0.0), mom(V, 0.0), vel(V, 0.0);
  double gb = 0.0, mb = 0.0, vb = 0.0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double reg = 1.0 / (config.c * static_cast<double>(n));
  Rng rng(config.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, n);
      const double inv = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      gb = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto r = order[k];
        const auto row = X.row(r);
        const double target = y[r] == Label::Ai ? 1.0 : 0.0;
        const double z = margin(m, row);
        double d = 0.0;
        if (loss == LinearLoss::Logistic) {
          d = sigmoid(z) - target;
        } else {
          const double s = 2.0 * target - 1.0;
          d = s * z < 1.0 ? -s : 0.0;
        }
        if (d == 0.0) continue;
        for (const auto& e : row) grad[e.index] += d * e.count * inv;
        gb += d * inv;
      }
      ++step;
      const double lr_t = config.learning_rate * std::sqrt(1.0 - std::pow(b2, static_cast<double>(step))) /
                          (1.0 - std::pow(b1, static_cast<double>(step)));
      for (std::size_t j = 0; j < V; ++j) {
        const double g = grad[j] + reg * m.weights[j];
        mom[j] = b1 * mom[j] + (1 - b1) * g;
        vel[j] = b2 * vel[j] + (1 - b2) * g * g;
        m.weights[j] -= lr_t * mom[j] / (std::sqrt(vel[j]) + eps);
      }
      mb = b1 * mb + (1 - b1) * gb;
      vb = b2 * vb + (1 - b2) * gb * gb;
      m.bias -= lr_t * mb / (std::sqrt(vb) + eps);
    }
  }
  return m;
}

std::vector<Prediction> linear_predict(const LinearModel& model, const DocTermMatrix& X) {
  std::vector<Prediction> out;
  out.reserve(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out.push_back(prediction_from_score(sigmoid(margin(model, X.row(r)))));
  return out;
}

void DecisionTree::fit(const DocTermMatrix& X, std::span<const Label> y, const TreeConfig& config,
                       std::span<const std::size_t> sample_rows) {
  check_training_labels(X.rows(), y);
  nodes_.clear();
  depth_ = 0;
  Rng rng(config.seed);

  struct Pending {
    std::int32_t node;
    std::vector<std::size_t> rows;
    int depth;
  };
  std::vector<Pending> stack;
  {
    std::vector<std::size_t> all;
    if (sample_rows.empty()) {
      all.resize(X.rows());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    } else {
      all.assign(sample_rows.begin(), sample_rows.end());
    }
    nodes_.push_back({});
    stack.push_back({0, std::move(all), 0});
  }

  struct Entry {
    std::uint32_t count;
    bool ai;
  };
  std::vector<std::vector<Entry>> buckets(X.cols());
  std::vector<std::uint32_t> touched;

  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();
    depth_ = std::max(depth_, job.depth);
    const auto& rows = job.rows;
    const double n = static_cast<double>(rows.size());
    double n_ai = 0.0;
    for (auto r : rows) n_ai += y[r] == Label::Ai;
    nodes_[job.node].score_ai = n_ai / n;

    const bool pure = n_ai == 0.0 || n_ai == n;
    if (pure || rows.size() < config.min_samples_split || (config.max_depth > 0 && job.depth >= config.max_depth)) {
      continue;
    }

    for (auto r : rows) {
      for (const auto& e : X.row(r)) {
        auto& b = buckets[e.index];
        if (b.empty()) touched.push_back(e.index);
        b.push_back({e.count, y[r] == Label::Ai});
      }
    }
    std::sort(touched.begin(), touched.end());
    std::vector<std::uint32_t> candidates;
    for (auto f : touched) {
      const auto& b = buckets[f];
      bool constant = b.size() == rows.size();
      for (std::size_t i = 1; constant && i < b.size(); ++i) constant = b[i].count == b[0].count;
      if (!constant) candidates.push_back(f);
    }
    if (config.max_features > 0 && candidates.size() > config.max_features) {
      auto pick = rng.sample_indices(candidates.size(), config.max_features);
      std::sort(pick.begin(), pick.end());
      std::vector<std::uint32_t> chosen;
      for (auto i : pick) chosen.push_back(candidates[i]);
      candidates = std::move(chosen);
    }

    // Maximize Σ_children (ai² + human²)/size, equivalent to minimizing weighted Gini.
    double best_gain = -1.0;
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;
    for (auto f : candidates) {
      auto& b = buckets[f];
      std::sort(b.begin(), b.end(), [](const Entry& a, const Entry& c) { return a.count < c.count; });
      double left_n = n - static_cast<double>(b.size());
      double left_ai = n_ai;
      for (const auto& e : b) left_ai -= e.ai;
      std::uint32_t prev = 0;
      std::size_t i = 0;
      while (true) {
        if (left_n > 0.0 && left_n < n) {
          const double right_n = n - left_n;
          const double right_ai = n_ai - left_ai;
          const double lh = left_n - left_ai, rh = right_n - right_ai;
          const double gain = (left_ai * left_ai + lh * lh) / left_n + (right_ai * right_ai + rh * rh) / right_n;
          const double next = i < b.size() ? b[i].count : prev + 1.0;
          if (gain > best_gain + 1e-12) {
            best_gain = gain;
            best_feature = static_cast<std::int32_t>(f);
            best_threshold = 0.5 * (prev + next);
          }
        }
        if (i >= b.size()) break;
        prev = b[i].count;
        while (i < b.size() && b[i].count == prev) {
          left_n += 1.0;
          left_ai += b[i].ai;
          ++i;
        }
      }
    }
    for (auto f : touched) buckets[f].clear();
    touched.clear();
    if (best_feature < 0) continue;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      const auto c = count_in_row(X.row(r), static_cast<std::uint32_t>(best_feature));
      (c <= best_threshold ? left : right).push_back(r);
    }
    const auto li = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    nodes_.push_back({});
    auto& node = nodes_[job.node];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = li;
    node.right = li + 1;
    stack.push_back({li + 1, std::move(right), job.depth + 1});
    stack.push_back({li, std::move(left), job.depth + 1});
  }
}

double DecisionTree::score(std::span<const TermCount> row) const {
  std::int32_t at = 0;
  while (nodes_[at].feature >= 0) {
    const auto& node = nodes_[at];
    at = count_in_row(row, static_cast<std::uint32_t>(node.feature)) <= node.threshold ? node.left : node.right;
  }
  return nodes_[at].score_ai;
}

std::vector<Prediction> DecisionTree::predict(const DocTermMatrix& X) const {
  std::vector<Prediction> out;
  out.reserve(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out.push_back(prediction_from_score(score(X.row(r))));
  return out;
}

void RandomForest::fit(const DocTermMatrix& X, std::span<const Label> y, const ForestConfig& config) {
  check_training_labels(X.rows(), y);
  if (config.n_trees == 0) throw Error(ErrorCode::InvalidArgument, "n_trees must be >= 1");
  trees_.assign(config.n_trees, {});
  Rng rng(config.seed);
  TreeConfig tc;
  tc.max_features = config.max_features > 0
                        ? config.max_features
                        : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(X.cols()))));
  const std::size_t n = X.rows();
  std::vector<std::size_t> sample(n);
  for (auto& tree : trees_) {
    bool both = false;
    do {
      for (auto& s : sample) s = rng.index(n);
      bool seen[2] = {false, false};
      for (auto s : sample) seen[static_cast<int>(y[s])] = true;
      both = seen[0] && seen[1];
    } while (!both);
    tc.seed = rng.next();
    tree.fit(X, y, tc, sample);
  }
}

std::vector<Prediction> RandomForest::predict(const DocTermMatrix& X) const {
  std::vector<Prediction> out;
  out.reserve(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double s = 0.0;
    for (const auto& t : trees_) s += t.score(X.row(r));
    out.push_back(prediction_from_score(s / static_cast<double>(trees_.size())));
  }
  return out;
}

std::vector<Prediction> baseline_train_predict(BaselineKind kind, const DocTermMatrix& X, std::span<const Label> y,
                                               const DocTermMatrix& X_eval, std::uint64_t seed) {
  switch (kind) {
    case BaselineKind::LogisticRegression: {
      LinearConfig c;
      c.seed = seed;
      return linear_predict(linear_train(X, y, LinearLoss::Logistic, c), X_eval);
    }
    case BaselineKind::LinearSvm: {
      LinearConfig c;
      c.seed = seed;
      return linear_predict(linear_train(X, y, LinearLoss::Hinge, c), X_eval);
    }
    case BaselineKind::DecisionTree: {
      DecisionTree t;
      TreeConfig c;
      c.seed = seed;
      t.fit(X, y, c);
      return t.predict(X_eval);
    }
    case BaselineKind::RandomForest: {
      RandomForest f;
      ForestConfig c;
      c.seed = seed;
      f.fit(X, y, c);
      return f.predict(X_eval);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown baseline kind");
}

}  // namespace detective::models
