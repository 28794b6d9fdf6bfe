#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deepgen/container.hpp"
#include "deepgen/tensor.hpp"

namespace deepgen {

// L2-regularized logistic regression head.
struct LogisticModel {
  Tensor weights;  // {d}
  double bias = 0.0;
  double C = 1.0;  // inverse regularization strength
};

struct LogisticFitInfo {
  std::vector<double> epoch_objective;
  double step_size = 0.0;  // final (possibly halved) step
};

// Full-batch gradient descent on mean cross-entropy + ||w||^2 / (2C).
// The bias is not regularized. Labels are 0/1; both classes must appear.
LogisticModel logistic_fit(const Tensor& features, const std::vector<int>& labels, double C,
                           double step_size = 0.1, std::size_t epochs = 500,
                           std::uint64_t seed = 0, LogisticFitInfo* info = nullptr);

struct LogisticPrediction {
  std::vector<double> probabilities;
  std::vector<int> labels;  // 1 iff p >= 0.5
};

LogisticPrediction logistic_predict(const LogisticModel& m, const Tensor& features);

// Objective value and its gradient at the model's current parameters,
// exposed so the descent direction can be checked independently.
double logistic_objective(const LogisticModel& m, const Tensor& features,
                          const std::vector<int>& labels);
void logistic_gradient(const LogisticModel& m, const Tensor& features,
                       const std::vector<int>& labels, Tensor* grad_w, double* grad_b);

// RBF-kernel SVM trained by simplified sequential minimal optimization.
struct SvmModel {
  Tensor support_vectors;           // {n_sv, d}
  std::vector<double> dual_coeffs;  // alpha_i * y_i
  double bias = 0.0;
  double svm_C = 1.0;
  double gamma = 1.0;
  bool converged = false;  // false when max_passes ran out first
};

// exp(-gamma * ||a-b||^2)
double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

// Labels must be -1/+1 and contain both classes. A pass with no coefficient
// changes counts as convergence; max_passes is a hard budget.
SvmModel svm_fit(const Tensor& features, const std::vector<int>& labels, double svm_C,
                 double gamma, double tol = 1e-3, std::size_t max_passes = 50,
                 std::uint64_t seed = 0);

struct SvmPrediction {
  std::vector<double> decision_values;
  std::vector<int> labels;  // -1/+1, zero decision -> +1
};

SvmPrediction svm_predict(const SvmModel& m, const Tensor& features);

// Analytic gradient of the SMO dual objective W(alpha) at the fitted
// coefficients: dW/dalpha_i = 1 - y_i * sum_j alpha_j y_j K(x_j, x_i).
// Exposed for finite-difference verification of the dual.
std::vector<double> svm_dual_gradient(const Tensor& features, const std::vector<int>& labels,
                                      const std::vector<double>& alphas, double gamma);
double svm_dual_objective(const Tensor& features, const std::vector<int>& labels,
                          const std::vector<double>& alphas, double gamma);

Container to_container(const LogisticModel& m);
LogisticModel logistic_from_container(const Container& c);
Container to_container(const SvmModel& m);
SvmModel svm_from_container(const Container& c);

}  // namespace deepgen
