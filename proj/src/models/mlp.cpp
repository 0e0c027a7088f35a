#include "detective/models/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "detective/error.hpp"
#include "detective/random.hpp"

namespace detective::models {

namespace {

using features::DocTermMatrix;

struct Forward {
  std::vector<double> z1;
  std::vector<double> a1;
  double z2[2] = {0.0, 0.0};
  double p[2] = {0.5, 0.5};
  double log_p[2] = {0.0, 0.0};
};

void forward(const MLPModel& m, std::span<const features::TermCount> row, Forward& f) {
  const std::size_t H = m.hidden;
  f.z1.assign(m.b1.begin(), m.b1.end());
  for (const auto& e : row) {
    const double c = e.count;
    const double* w = m.w1.data() + static_cast<std::size_t>(e.index) * H;
    for (std::size_t h = 0; h < H; ++h) f.z1[h] += c * w[h];
  }
  f.a1.resize(H);
  f.z2[0] = m.b2[0];
  f.z2[1] = m.b2[1];
  for (std::size_t h = 0; h < H; ++h) {
    const double a = f.z1[h] > 0.0 ? f.z1[h] : 0.0;
    f.a1[h] = a;
    f.z2[0] += a * m.w2[2 * h];
    f.z2[1] += a * m.w2[2 * h + 1];
  }
  const double mx = std::max(f.z2[0], f.z2[1]);
  const double lse = mx + std::log(std::exp(f.z2[0] - mx) + std::exp(f.z2[1] - mx));
  f.log_p[0] = f.z2[0] - lse;
  f.log_p[1] = f.z2[1] - lse;
  f.p[0] = std::exp(f.log_p[0]);
  f.p[1] = std::exp(f.log_p[1]);
}

double sum_squares(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

/// Adds the data term of the gradient for `rows` into g (which must be
/// zero on entry) and returns the mean cross-entropy. Touched w1 rows are
/// recorded so callers can clear them cheaply.
double accumulate_data_gradient(const MLPModel& m, const DocTermMatrix& X, std::span<const Label> y,
                                std::span<const std::size_t> rows, MlpGradient& g, Forward& f,
                                std::vector<double>& delta1, std::vector<std::uint32_t>* touched,
                                std::vector<char>* touched_mask) {
  const std::size_t H = m.hidden;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;
  delta1.resize(H);
  for (auto r : rows) {
    auto row = X.row(r);
    forward(m, row, f);
    const int target = static_cast<int>(y[r]);
    loss -= f.log_p[target];
    const double d2[2] = {(f.p[0] - (target == 0)) * inv_n, (f.p[1] - (target == 1)) * inv_n};
    g.b2[0] += d2[0];
    g.b2[1] += d2[1];
    for (std::size_t h = 0; h < H; ++h) {
      g.w2[2 * h] += f.a1[h] * d2[0];
      g.w2[2 * h + 1] += f.a1[h] * d2[1];
      delta1[h] = f.z1[h] > 0.0 ? m.w2[2 * h] * d2[0] + m.w2[2 * h + 1] * d2[1] : 0.0;
      g.b1[h] += delta1[h];
    }
    for (const auto& e : row) {
      double* gw = g.w1.data() + static_cast<std::size_t>(e.index) * H;
      const double c = e.count;
      for (std::size_t h = 0; h < H; ++h) gw[h] += c * delta1[h];
      if (touched && !(*touched_mask)[e.index]) {
        (*touched_mask)[e.index] = 1;
        touched->push_back(e.index);
      }
    }
  }
  return loss * inv_n;
}

void validate_config(const MlpConfig& c) {
  if (c.hidden_units == 0) throw Error(ErrorCode::InvalidArgument, "hidden_units must be >= 1");
  if (c.batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (c.max_epochs < 1) throw Error(ErrorCode::InvalidArgument, "max_epochs must be >= 1");
  if (!(c.learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
  if (c.l2 < 0.0) throw Error(ErrorCode::InvalidArgument, "l2 must be >= 0");
}

// Loss in extended precision, for the finite-difference reference only. In
// double, the difference of two losses near 0.7 carries ~1e-16 rounding
// noise, which swamps gradients below ~1e-7 at h = 1e-5.
long double loss_extended(const MLPModel& m, const DocTermMatrix& X, std::span<const Label> y, double l2) {
  using LD = long double;
  const std::size_t H = m.hidden;
  std::vector<LD> z1(H);
  LD total = 0.0L;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    for (std::size_t h = 0; h < H; ++h) z1[h] = m.b1[h];
    for (const auto& e : X.row(r)) {
      const double* w = m.w1.data() + static_cast<std::size_t>(e.index) * H;
      for (std::size_t h = 0; h < H; ++h) z1[h] += static_cast<LD>(e.count) * w[h];
    }
    LD z2[2] = {m.b2[0], m.b2[1]};
    for (std::size_t h = 0; h < H; ++h) {
      const LD a = z1[h] > 0.0L ? z1[h] : 0.0L;
      z2[0] += a * m.w2[2 * h];
      z2[1] += a * m.w2[2 * h + 1];
    }
    const LD mx = std::max(z2[0], z2[1]);
    const LD lse = mx + std::log(std::exp(z2[0] - mx) + std::exp(z2[1] - mx));
    total -= z2[static_cast<int>(y[r])] - lse;
  }
  LD sq = 0.0L;
  for (double w : m.w1) sq += static_cast<LD>(w) * w;
  for (double w : m.w2) sq += static_cast<LD>(w) * w;
  const LD n = static_cast<LD>(X.rows());
  return total / n + 0.5L * (static_cast<LD>(l2) / n) * sq;
}

struct Adam {
  std::vector<double> m;
  std::vector<double> v;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

}  // namespace

MLPModel mlp_zero(std::size_t n_features, std::size_t hidden) {
  MLPModel m;
  m.n_features = n_features;
  m.hidden = hidden;
  m.config.hidden_units = hidden;
  m.w1.assign(n_features * hidden, 0.0);
  m.b1.assign(hidden, 0.0);
  m.w2.assign(hidden * 2, 0.0);
  m.b2.assign(2, 0.0);
  return m;
}

MLPModel mlp_init(std::size_t n_features, const MlpConfig& config) {
  validate_config(config);
  MLPModel m = mlp_zero(n_features, config.hidden_units);
  m.config = config;
  Rng rng(config.seed);
  auto fill = [&](std::vector<double>& v, double fan_in, double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& x : v) x = rng.uniform(-bound, bound);
  };
  const double V = static_cast<double>(n_features);
  const double H = static_cast<double>(config.hidden_units);
  fill(m.w1, V, H);
  fill(m.b1, V, H);
  fill(m.w2, H, 2.0);
  fill(m.b2, H, 2.0);
  return m;
}

MlpGradient mlp_loss_and_gradient(const MLPModel& model, const DocTermMatrix& X, std::span<const Label> y,
                                  std::span<const std::size_t> rows, double l2) {
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "gradient over zero rows");
  MlpGradient g;
  g.w1.assign(model.w1.size(), 0.0);
  g.b1.assign(model.b1.size(), 0.0);
  g.w2.assign(model.w2.size(), 0.0);
  g.b2.assign(2, 0.0);
  Forward f;
  std::vector<double> delta1;
  g.loss = accumulate_data_gradient(model, X, y, rows, g, f, delta1, nullptr, nullptr);
  const double scale = l2 / static_cast<double>(rows.size());
  g.loss += 0.5 * scale * (sum_squares(model.w1) + sum_squares(model.w2));
  for (std::size_t i = 0; i < g.w1.size(); ++i) g.w1[i] += scale * model.w1[i];
  for (std::size_t i = 0; i < g.w2.size(); ++i) g.w2[i] += scale * model.w2[i];
  return g;
}

double mlp_loss(const MLPModel& model, const DocTermMatrix& X, std::span<const Label> y, double l2) {
  Forward f;
  double loss = 0.0;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    forward(model, X.row(r), f);
    loss -= f.log_p[static_cast<int>(y[r])];
  }
  const double n = static_cast<double>(X.rows());
  return loss / n + 0.5 * (l2 / n) * (sum_squares(model.w1) + sum_squares(model.w2));
}

MLPModel mlp_train(const DocTermMatrix& X, std::span<const Label> y, const MlpConfig& config,
                   const EpochCallback& on_epoch) {
  check_training_labels(X.rows(), y);
  MLPModel m = mlp_init(X.cols(), config);
  const std::size_t n = X.rows();
  const std::size_t H = m.hidden;
  const std::size_t batch = std::min(config.batch_size, n);

  // Initialization and shuffling use independent streams so that changing
  // one never perturbs the other.
  Rng shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  Adam adam_w1(m.w1.size()), adam_b1(m.b1.size()), adam_w2(m.w2.size()), adam_b2(m.b2.size());
  MlpGradient g;
  g.w1.assign(m.w1.size(), 0.0);
  g.b1.assign(H, 0.0);
  g.w2.assign(m.w2.size(), 0.0);
  g.b2.assign(2, 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<char> touched_mask(X.cols(), 0);
  Forward f;
  std::vector<double> delta1;

  double best_loss = std::numeric_limits<double>::infinity();
  int no_improvement = 0;
  long step = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      std::span<const std::size_t> rows(order.data() + start, end - start);
      const double bn = static_cast<double>(rows.size());
      double batch_loss = accumulate_data_gradient(m, X, y, rows, g, f, delta1, &touched, &touched_mask);

      ++step;
      const double lr_t = config.learning_rate * std::sqrt(1.0 - std::pow(config.beta2, static_cast<double>(step))) /
                          (1.0 - std::pow(config.beta1, static_cast<double>(step)));
      const double scale = config.l2 / bn;
      double sq = 0.0;
      auto update = [&](std::vector<double>& w, std::vector<double>& grad, Adam& a, bool decay) {
        const double b1 = config.beta1, b2 = config.beta2, eps = config.epsilon;
        for (std::size_t i = 0; i < w.size(); ++i) {
          double gi = grad[i];
          if (decay) {
            sq += w[i] * w[i];
            gi += scale * w[i];
          }
          a.m[i] = b1 * a.m[i] + (1.0 - b1) * gi;
          a.v[i] = b2 * a.v[i] + (1.0 - b2) * gi * gi;
          w[i] -= lr_t * a.m[i] / (std::sqrt(a.v[i]) + eps);
        }
      };
      update(m.w1, g.w1, adam_w1, true);
      update(m.b1, g.b1, adam_b1, false);
      update(m.w2, g.w2, adam_w2, true);
      update(m.b2, g.b2, adam_b2, false);
      batch_loss += 0.5 * scale * sq;
      epoch_loss += batch_loss * bn;

      for (auto t : touched) {
        std::fill_n(g.w1.begin() + static_cast<std::ptrdiff_t>(t * H), H, 0.0);
        touched_mask[t] = 0;
      }
      touched.clear();
      std::fill(g.b1.begin(), g.b1.end(), 0.0);
      std::fill(g.w2.begin(), g.w2.end(), 0.0);
      std::fill(g.b2.begin(), g.b2.end(), 0.0);
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::NonFiniteLoss, "training loss became non-finite at epoch " + std::to_string(epoch));
    }
    m.loss_curve.push_back(epoch_loss);
    m.epochs_run = epoch;
    if (on_epoch) on_epoch(epoch, m);

    if (epoch_loss > best_loss - config.tol) {
      ++no_improvement;
    } else {
      no_improvement = 0;
    }
    best_loss = std::min(best_loss, epoch_loss);
    if (no_improvement > config.n_iter_no_change) break;
  }
  return m;
}

std::vector<Prediction> mlp_predict(const MLPModel& model, const DocTermMatrix& X) {
  if (X.cols() != model.n_features) {
    throw Error(ErrorCode::InvalidArgument, "matrix width does not match the network input size");
  }
  std::vector<Prediction> out;
  out.reserve(X.rows());
  Forward f;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    forward(model, X.row(r), f);
    out.push_back(prediction_from_score(f.p[1]));
  }
  return out;
}

double mlp_gradient_check(const MLPModel& model, const DocTermMatrix& X, std::span<const Label> y, double l2,
                          const GradientCheckOptions& options) {
  if (X.rows() == 0 || X.rows() != y.size()) throw Error(ErrorCode::InvalidArgument, "bad gradient-check batch");
  std::vector<std::size_t> all(X.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto g = mlp_loss_and_gradient(model, X, y, all, l2);

  // Parameters are addressed in the flattened order w1, b1, w2, b2.
  const std::size_t sizes[4] = {model.w1.size(), model.b1.size(), model.w2.size(), model.b2.size()};
  const std::size_t total = sizes[0] + sizes[1] + sizes[2] + sizes[3];
  Rng rng(options.sample_seed);
  auto picks = rng.sample_indices(total, std::min(options.max_params, total));

  MLPModel probe = model;
  double worst = 0.0;
  for (auto flat : picks) {
    std::size_t block = 0;
    std::size_t i = flat;
    while (i >= sizes[block]) i -= sizes[block++];
    std::vector<double>* params[4] = {&probe.w1, &probe.b1, &probe.w2, &probe.b2};
    const std::vector<double>* grads[4] = {&g.w1, &g.b1, &g.w2, &g.b2};
    double& p = (*params[block])[i];
    const double saved = p;
    const double hi = saved + options.step;
    const double lo = saved - options.step;
    p = hi;
    const long double up = loss_extended(probe, X, y, l2);
    p = lo;
    const long double down = loss_extended(probe, X, y, l2);
    p = saved;
    // Divide by the step actually taken after rounding hi and lo.
    const double numeric = static_cast<double>((up - down) / (static_cast<long double>(hi) - lo));
    const double analytic = (*grads[block])[i];
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
    worst = std::max(worst, std::abs(numeric - analytic) / denom);
  }
  return worst;
}

double mlp_gradient_check(const MlpConfig& config, const DocTermMatrix& X, std::span<const Label> y,
                          const GradientCheckOptions& options) {
  return mlp_gradient_check(mlp_init(X.cols(), config), X, y, config.l2, options);
}

}  // namespace detective::models
