#include "deepgen/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "deepgen/errors.hpp"
#include "deepgen/rng.hpp"
#include "deepgen/textutil.hpp"

namespace deepgen {
namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

std::span<const double> row(const Tensor& t, std::size_t r) {
  return {t.data() + r * t.dim(1), t.dim(1)};
}

void check_features(const Tensor& features, std::size_t n_labels, const char* what) {
  if (features.rank() != 2)
    throw dimension_error(std::string(what) + ": features must be {samples, width}");
  if (features.dim(0) != n_labels)
    throw dimension_error(std::string(what) + ": " + std::to_string(features.dim(0)) +
                          " samples vs " + std::to_string(n_labels) + " labels");
  check_finite(features, what);
}

void check_binary_present(const std::vector<int>& labels, int lo, int hi) {
  bool saw_lo = false, saw_hi = false;
  for (int y : labels) {
    if (y == lo)
      saw_lo = true;
    else if (y == hi)
      saw_hi = true;
    else
      throw label_error("label " + std::to_string(y) + " outside {" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "}");
  }
  if (!saw_lo || !saw_hi)
    throw config_error("degenerate fit: only one class present in labels");
}

double meta_double(const Container& c, const std::string& key) {
  const std::string& s = c.meta_value(key);
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size() || !std::isfinite(v))
    throw format_error("bad numeric meta " + key + " = " + s, 0);
  return v;
}

}  // namespace

double logistic_objective(const LogisticModel& m, const Tensor& features,
                          const std::vector<int>& labels) {
  check_features(features, labels.size(), "logistic_objective");
  const std::size_t n = features.dim(0), d = features.dim(1);
  if (m.weights.size() != d) throw dimension_error("weight width mismatch");
  double ce = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = row(features, r);
    double z = m.bias;
    for (std::size_t j = 0; j < d; ++j) z += m.weights[j] * x[j];
    // -y log p - (1-y) log(1-p) in the overflow-safe form softplus(z) - y z.
    ce += softplus(z) - static_cast<double>(labels[r]) * z;
  }
  double reg = 0.0;
  for (std::size_t j = 0; j < d; ++j) reg += m.weights[j] * m.weights[j];
  return ce / static_cast<double>(n) + reg / (2.0 * m.C);
}

void logistic_gradient(const LogisticModel& m, const Tensor& features,
                       const std::vector<int>& labels, Tensor* grad_w, double* grad_b) {
  check_features(features, labels.size(), "logistic_gradient");
  const std::size_t n = features.dim(0), d = features.dim(1);
  if (m.weights.size() != d) throw dimension_error("weight width mismatch");
  *grad_w = Tensor({d});
  *grad_b = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = row(features, r);
    double z = m.bias;
    for (std::size_t j = 0; j < d; ++j) z += m.weights[j] * x[j];
    const double residual = sigmoid(z) - static_cast<double>(labels[r]);
    for (std::size_t j = 0; j < d; ++j) (*grad_w)[j] += residual * x[j];
    *grad_b += residual;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) (*grad_w)[j] = (*grad_w)[j] * inv_n + m.weights[j] / m.C;
  *grad_b *= inv_n;
}

LogisticModel logistic_fit(const Tensor& features, const std::vector<int>& labels, double C,
                           double step_size, std::size_t epochs, std::uint64_t /*seed*/,
                           LogisticFitInfo* info) {
  if (C <= 0.0) throw config_error("C must be positive");
  if (step_size <= 0.0) throw config_error("step size must be positive");
  check_features(features, labels.size(), "logistic_fit");
  check_binary_present(labels, 0, 1);

  const std::size_t d = features.dim(1);
  LogisticModel m{Tensor({d}), 0.0, C};
  double step = step_size;
  double current = logistic_objective(m, features, labels);
  if (info) {
    info->epoch_objective.clear();
    info->epoch_objective.reserve(epochs);
  }

  Tensor gw;
  double gb = 0.0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    logistic_gradient(m, features, labels, &gw, &gb);
    // Halve the step until the objective stops increasing.
    bool moved = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      LogisticModel trial = m;
      for (std::size_t j = 0; j < d; ++j) trial.weights[j] -= step * gw[j];
      trial.bias -= step * gb;
      const double next = logistic_objective(trial, features, labels);
      if (next <= current) {
        m = std::move(trial);
        current = next;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (info) info->epoch_objective.push_back(current);
    if (!moved) break;  // step underflowed: already at a minimum
  }
  if (info) info->step_size = step;
  check_finite(m.weights, "logistic weights");
  return m;
}

LogisticPrediction logistic_predict(const LogisticModel& m, const Tensor& features) {
  if (features.rank() != 2 || features.dim(1) != m.weights.size())
    throw dimension_error("logistic_predict: features " + features.shape_str() +
                          " vs weight width " + std::to_string(m.weights.size()));
  check_finite(features, "logistic_predict");
  const std::size_t n = features.dim(0), d = features.dim(1);
  LogisticPrediction out;
  out.probabilities.reserve(n);
  out.labels.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = row(features, r);
    double z = m.bias;
    for (std::size_t j = 0; j < d; ++j) z += m.weights[j] * x[j];
    const double p = sigmoid(z);
    out.probabilities.push_back(p);
    out.labels.push_back(p >= 0.5 ? 1 : 0);
  }
  return out;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  if (a.size() != b.size()) throw dimension_error("kernel arguments differ in width");
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

SvmModel svm_fit(const Tensor& features, const std::vector<int>& labels, double svm_C,
                 double gamma, double tol, std::size_t max_passes, std::uint64_t seed) {
  if (svm_C <= 0.0) throw config_error("svm_C must be positive");
  if (gamma <= 0.0) throw config_error("gamma must be positive");
  if (tol <= 0.0) throw config_error("tolerance must be positive");
  if (max_passes < 1) throw config_error("max_passes must be at least 1");
  check_features(features, labels.size(), "svm_fit");
  check_binary_present(labels, -1, 1);

  const std::size_t n = features.dim(0);
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      k[i * n + j] = k[j * n + i] = rbf_kernel(row(features, i), row(features, j), gamma);

  std::vector<double> alpha(n, 0.0);
  double b = 0.0;
  const auto y = [&labels](std::size_t i) { return static_cast<double>(labels[i]); };
  const auto f = [&](std::size_t i) {
    double s = b;
    for (std::size_t j = 0; j < n; ++j)
      if (alpha[j] != 0.0) s += alpha[j] * y(j) * k[j * n + i];
    return s;
  };

  Rng rng(seed);
  bool converged = false;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = f(i) - y(i);
      const bool violates = (y(i) * ei < -tol && alpha[i] < svm_C) ||
                            (y(i) * ei > tol && alpha[i] > 0.0);
      if (!violates) continue;
      std::size_t j = rng.below(n - 1);
      if (j >= i) ++j;
      const double ej = f(j) - y(j);
      const double ai_old = alpha[i], aj_old = alpha[j];
      double lo, hi;
      if (labels[i] != labels[j]) {
        lo = std::max(0.0, aj_old - ai_old);
        hi = std::min(svm_C, svm_C + aj_old - ai_old);
      } else {
        lo = std::max(0.0, ai_old + aj_old - svm_C);
        hi = std::min(svm_C, ai_old + aj_old);
      }
      if (lo == hi) continue;
      const double eta = 2.0 * k[i * n + j] - k[i * n + i] - k[j * n + j];
      if (eta >= 0.0) continue;
      double aj = aj_old - y(j) * (ei - ej) / eta;
      aj = std::clamp(aj, lo, hi);
      if (std::abs(aj - aj_old) < 1e-5) continue;
      const double ai = ai_old + y(i) * y(j) * (aj_old - aj);
      alpha[i] = ai;
      alpha[j] = aj;
      const double b1 = b - ei - y(i) * (ai - ai_old) * k[i * n + i] -
                        y(j) * (aj - aj_old) * k[i * n + j];
      const double b2 = b - ej - y(i) * (ai - ai_old) * k[i * n + j] -
                        y(j) * (aj - aj_old) * k[j * n + j];
      if (ai > 0.0 && ai < svm_C)
        b = b1;
      else if (aj > 0.0 && aj < svm_C)
        b = b2;
      else
        b = 0.5 * (b1 + b2);
      ++changed;
    }
    if (changed == 0) {
      converged = true;
      break;
    }
  }

  SvmModel m;
  m.svm_C = svm_C;
  m.gamma = gamma;
  m.bias = b;
  m.converged = converged;
  std::vector<std::size_t> sv;
  for (std::size_t i = 0; i < n; ++i)
    if (alpha[i] > 1e-12) sv.push_back(i);
  if (!sv.empty()) {
    const std::size_t d = features.dim(1);
    m.support_vectors = Tensor({sv.size(), d});
    m.dual_coeffs.reserve(sv.size());
    for (std::size_t r = 0; r < sv.size(); ++r) {
      const auto x = row(features, sv[r]);
      std::copy(x.begin(), x.end(), m.support_vectors.data() + r * d);
      m.dual_coeffs.push_back(alpha[sv[r]] * y(sv[r]));
    }
  }
  return m;
}

SvmPrediction svm_predict(const SvmModel& m, const Tensor& features) {
  if (features.rank() != 2) throw dimension_error("svm_predict: features must be {samples, width}");
  if (!m.dual_coeffs.empty() && features.dim(1) != m.support_vectors.dim(1))
    throw dimension_error("svm_predict: features " + features.shape_str() +
                          " vs support vectors " + m.support_vectors.shape_str());
  check_finite(features, "svm_predict");
  SvmPrediction out;
  const std::size_t n = features.dim(0);
  out.decision_values.reserve(n);
  out.labels.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    double dec = m.bias;
    for (std::size_t s = 0; s < m.dual_coeffs.size(); ++s)
      dec += m.dual_coeffs[s] *
             rbf_kernel(row(m.support_vectors, s), row(features, r), m.gamma);
    out.decision_values.push_back(dec);
    out.labels.push_back(dec >= 0.0 ? 1 : -1);
  }
  return out;
}

double svm_dual_objective(const Tensor& features, const std::vector<int>& labels,
                          const std::vector<double>& alphas, double gamma) {
  check_features(features, labels.size(), "svm_dual_objective");
  if (alphas.size() != labels.size()) throw dimension_error("one alpha per sample required");
  const std::size_t n = alphas.size();
  double sum = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += alphas[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (alphas[i] == 0.0 || alphas[j] == 0.0) continue;
      quad += alphas[i] * alphas[j] * static_cast<double>(labels[i]) *
              static_cast<double>(labels[j]) *
              rbf_kernel(row(features, i), row(features, j), gamma);
    }
  }
  return sum - 0.5 * quad;
}

std::vector<double> svm_dual_gradient(const Tensor& features, const std::vector<int>& labels,
                                      const std::vector<double>& alphas, double gamma) {
  check_features(features, labels.size(), "svm_dual_gradient");
  if (alphas.size() != labels.size()) throw dimension_error("one alpha per sample required");
  const std::size_t n = alphas.size();
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      s += alphas[j] * static_cast<double>(labels[j]) *
           rbf_kernel(row(features, j), row(features, i), gamma);
    g[i] = 1.0 - static_cast<double>(labels[i]) * s;
  }
  return g;
}

Container to_container(const LogisticModel& m) {
  Container c;
  c.kind = "logistic";
  c.add_meta("C", format_full(m.C));
  c.add_tensor("weights", m.weights);
  c.add_tensor("bias", Tensor({1}, {m.bias}));
  return c;
}

LogisticModel logistic_from_container(const Container& c) {
  if (c.kind != "logistic")
    throw format_error("container kind is " + c.kind + ", expected logistic", 0);
  LogisticModel m;
  m.weights = c.tensor_named("weights");
  m.bias = c.tensor_named("bias")[0];
  m.C = meta_double(c, "C");
  return m;
}

Container to_container(const SvmModel& m) {
  Container c;
  c.kind = "svm";
  c.add_meta("svm_C", format_full(m.svm_C));
  c.add_meta("gamma", format_full(m.gamma));
  c.add_meta("converged", m.converged ? "1" : "0");
  c.add_meta("n_sv", std::to_string(m.dual_coeffs.size()));
  if (!m.dual_coeffs.empty()) {
    c.add_tensor("support_vectors", m.support_vectors);
    c.add_tensor("dual_coeffs", Tensor::vec(m.dual_coeffs));
  }
  c.add_tensor("bias", Tensor({1}, {m.bias}));
  return c;
}

SvmModel svm_from_container(const Container& c) {
  if (c.kind != "svm") throw format_error("container kind is " + c.kind + ", expected svm", 0);
  SvmModel m;
  m.svm_C = meta_double(c, "svm_C");
  m.gamma = meta_double(c, "gamma");
  m.converged = c.meta_value("converged") == "1";
  m.bias = c.tensor_named("bias")[0];
  if (c.meta_value("n_sv") != "0") {
    m.support_vectors = c.tensor_named("support_vectors");
    const Tensor& dc = c.tensor_named("dual_coeffs");
    m.dual_coeffs.assign(dc.data(), dc.data() + dc.size());
  }
  return m;
}

}  // namespace deepgen
