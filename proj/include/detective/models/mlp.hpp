#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "detective/features.hpp"
#include "detective/models/prediction.hpp"

namespace detective::models {

/// Training hyperparameters. Everything except hidden_units follows the
/// usual defaults of the scikit-learn MLPClassifier family.
struct MlpConfig {
  std::size_t hidden_units = 155;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2 = 1e-4;
  std::size_t batch_size = 200;  // clipped to the number of rows
  int max_epochs = 200;
  double tol = 1e-4;
  int n_iter_no_change = 10;
  std::uint64_t seed = 0;
};

/// One-hidden-layer rectifier network with a two-way softmax output.
/// w1 is n_features x hidden (row-major), w2 is hidden x 2.
struct MLPModel {
  std::size_t n_features = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;
  MlpConfig config;
  std::vector<double> loss_curve;
  int epochs_run = 0;
};

/// Glorot-uniform initialization from config.seed (biases included).
MLPModel mlp_init(std::size_t n_features, const MlpConfig& config);

/// All-zero weights; predicts 0.5 everywhere.
MLPModel mlp_zero(std::size_t n_features, std::size_t hidden);

using EpochCallback = std::function<void(int epoch, const MLPModel&)>;

MLPModel mlp_train(const features::DocTermMatrix& X, std::span<const Label> y, const MlpConfig& config,
                   const EpochCallback& on_epoch = {});

std::vector<Prediction> mlp_predict(const MLPModel& model, const features::DocTermMatrix& X);

struct MlpGradient {
  double loss = 0.0;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;
};

/// Mean cross-entropy over `rows` plus (l2 / 2n)·||W||², and its gradient.
MlpGradient mlp_loss_and_gradient(const MLPModel& model, const features::DocTermMatrix& X, std::span<const Label> y,
                                  std::span<const std::size_t> rows, double l2);

/// Loss only, over every row of X.
double mlp_loss(const MLPModel& model, const features::DocTermMatrix& X, std::span<const Label> y, double l2);

struct GradientCheckOptions {
  std::size_t max_params = 50;
  double step = 1e-5;
  std::uint64_t sample_seed = 1;
};

/// Max relative error |a - n| / max(|a|, |n|, 1e-8) between the analytic
/// gradient a and central finite differences n, over at most max_params
/// sampled parameters. Parameters are perturbed in double; the two losses
/// are evaluated in long double so their difference is not rounding noise.
double mlp_gradient_check(const MLPModel& model, const features::DocTermMatrix& X, std::span<const Label> y,
                          double l2, const GradientCheckOptions& options = {});

/// Same, starting from mlp_init(X.cols(), config).
double mlp_gradient_check(const MlpConfig& config, const features::DocTermMatrix& X, std::span<const Label> y,
                          const GradientCheckOptions& options = {});

}  // namespace detective::models
