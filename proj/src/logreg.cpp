#include "spn/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spn/error.hpp"

namespace spn {

namespace {

constexpr double kClamp = -700.0;

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

Eigen::MatrixXd clamp_features(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd out = X.cwiseMax(kClamp);
  if (!out.allFinite()) throw Error("non-finite feature after clamping");
  return out;
}

double binary_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& z, const Eigen::VectorXd& w,
                   double b, double C) {
  const Eigen::VectorXd margin = X * w + Eigen::VectorXd::Constant(X.rows(), b);
  double loss = 0.5 / C * w.squaredNorm();
  for (Eigen::Index i = 0; i < X.rows(); ++i) loss += softplus(-z[i] * margin[i]);
  return loss;
}

}  // namespace

double binary_loss_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                                const Eigen::VectorXd& w, double b, double C,
                                Eigen::VectorXd& grad_w, double& grad_b) {
  const Eigen::VectorXd margin = X * w + Eigen::VectorXd::Constant(X.rows(), b);
  double loss = 0.5 / C * w.squaredNorm();
  // d/dm softplus(-z m) = -z σ(-z m)
  Eigen::VectorXd coef(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double t = -z[i] * margin[i];
    loss += softplus(t);
    coef[i] = -z[i] / (1.0 + std::exp(-t));
  }
  grad_w = X.transpose() * coef + w / C;
  grad_b = coef.sum();
  return loss;
}

namespace {

// Gradient descent with Armijo backtracking; the loss never increases.
void fit_binary(const Eigen::MatrixXd& X, const Eigen::VectorXd& z, double C,
                const LogRegParams& params, Eigen::VectorXd& w, double& b) {
  w = Eigen::VectorXd::Zero(X.cols());
  b = 0.0;
  double step = 1.0 / std::max<double>(1.0, static_cast<double>(X.rows()));
  Eigen::VectorXd grad_w(X.cols());
  double grad_b = 0.0;
  double loss = binary_loss_and_gradient(X, z, w, b, C, grad_w, grad_b);
  if (params.loss_trace) params.loss_trace->push_back({loss});

  for (int iter = 0; iter < params.max_iters; ++iter) {
    const double g2 = grad_w.squaredNorm() + grad_b * grad_b;
    if (g2 == 0.0) break;

    double next_loss = 0.0;
    Eigen::VectorXd w_next;
    double b_next = 0.0;
    bool accepted = false;
    for (int back = 0; back < 60; ++back) {
      w_next = w - step * grad_w;
      b_next = b - step * grad_b;
      next_loss = binary_loss(X, z, w_next, b_next, C);
      if (next_loss <= loss - 1e-4 * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const double decrease = loss - next_loss;
    w = std::move(w_next);
    b = b_next;
    loss = binary_loss_and_gradient(X, z, w, b, C, grad_w, grad_b);
    if (params.loss_trace) params.loss_trace->back().push_back(loss);
    step *= 2.0;  // let the step recover after a cautious stretch
    if (decrease < params.tol) break;
  }
}

}  // namespace

LogRegModel train_logreg_ovr(const Eigen::MatrixXd& X, const std::vector<int>& y, double C,
                             const LogRegParams& params) {
  if (C <= 0.0) throw Error("C must be positive");
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) throw Error("label count mismatch");
  const std::set<int> distinct(y.begin(), y.end());
  if (distinct.size() < 2) throw Error("need at least two classes");

  const Eigen::MatrixXd Xc = clamp_features(X);
  LogRegModel model;
  model.classes.assign(distinct.begin(), distinct.end());
  model.C = C;
  model.weights.resize(static_cast<Eigen::Index>(model.classes.size()), X.cols());
  model.bias.resize(static_cast<Eigen::Index>(model.classes.size()));

  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    Eigen::VectorXd z(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      z[i] = y[static_cast<std::size_t>(i)] == model.classes[c] ? 1.0 : -1.0;
    Eigen::VectorXd w;
    double b;
    fit_binary(Xc, z, C, params, w, b);
    model.weights.row(static_cast<Eigen::Index>(c)) = w.transpose();
    model.bias[static_cast<Eigen::Index>(c)] = b;
  }
  return model;
}

std::vector<int> predict(const LogRegModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.weights.cols()) throw Error("feature arity mismatch");
  const Eigen::MatrixXd Xc = clamp_features(X);
  const Eigen::MatrixXd scores =
      (Xc * model.weights.transpose()).rowwise() + model.bias.transpose();
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;  // ties keep the lowest class id
    out[static_cast<std::size_t>(i)] = model.classes[static_cast<std::size_t>(best)];
  }
  return out;
}

double accuracy(const LogRegModel& model, const Eigen::MatrixXd& X, const std::vector<int>& y) {
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) throw Error("label count mismatch");
  if (y.empty()) throw Error("empty evaluation set");
  const std::vector<int> yhat = predict(model, X);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += yhat[i] == y[i];
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

GridSelection grid_select(const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
                          const Eigen::MatrixXd& valid_x, const std::vector<int>& valid_y,
                          std::span<const double> c_grid, const LogRegParams& params) {
  if (c_grid.empty()) throw Error("empty C grid");
  GridSelection best;
  double best_acc = -1.0;
  for (double c : c_grid) {
    LogRegModel model = train_logreg_ovr(train_x, train_y, c, params);
    const double acc = accuracy(model, valid_x, valid_y);
    if (acc > best_acc || (acc == best_acc && c < best.chosen_c)) {
      best_acc = acc;
      best.model = std::move(model);
      best.chosen_c = c;
    }
  }
  return best;
}

}  // namespace spn
