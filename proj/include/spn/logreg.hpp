#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace spn {

/// One-vs-rest L2-regularized logistic regression. Smaller C means stronger
/// regularization: the objective per class is
///   (1/C) · ½‖w‖² + Σ_i log(1 + exp(-z_i (w·x_i + b))),  z_i ∈ {-1, +1},
/// minimized by full-batch gradient descent with backtracking line search.
/// The bias is unregularized.
struct LogRegModel {
  Eigen::MatrixXd weights;  // classes × features
  Eigen::VectorXd bias;
  std::vector<int> classes;  // ascending distinct labels
  double C = 1.0;
};

struct LogRegParams {
  int max_iters = 1000;
  double tol = 1e-6;  // stop when the loss decrease falls below this
  // When set, receives one per-iteration loss sequence per binary
  // subproblem, in class order.
  std::vector<std::vector<double>>* loss_trace = nullptr;
};

/// Paper-standard regularization grid.
inline constexpr double kCGrid[] = {0.0001, 0.001, 0.01, 0.1, 1.0};

/// Features with -inf entries are clamped to -700 before entering the
/// optimizer; non-finite values after clamping are an error, as is a
/// single-class label vector.
LogRegModel train_logreg_ovr(const Eigen::MatrixXd& X, const std::vector<int>& y, double C,
                             const LogRegParams& params = {});

/// Argmax of the class scores; ties go to the lowest class id.
std::vector<int> predict(const LogRegModel& model, const Eigen::MatrixXd& X);

double accuracy(const LogRegModel& model, const Eigen::MatrixXd& X, const std::vector<int>& y);

struct GridSelection {
  LogRegModel model;
  double chosen_c = 0.0;
};

/// Refit per C, keep the best validation accuracy; ties go to the smaller C.
GridSelection grid_select(const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
                          const Eigen::MatrixXd& valid_x, const std::vector<int>& valid_y,
                          std::span<const double> c_grid, const LogRegParams& params = {});

/// Objective and analytic gradient of one binary subproblem; exposed so the
/// gradient can be checked against finite differences.
double binary_loss_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                                const Eigen::VectorXd& w, double b, double C,
                                Eigen::VectorXd& grad_w, double& grad_b);

}  // namespace spn
