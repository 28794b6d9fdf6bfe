#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deepgen/container.hpp"
#include "deepgen/rng.hpp"
#include "deepgen/tensor.hpp"

namespace deepgen {

// Bernoulli-Bernoulli RBM. Real inputs in [0,1] act as Bernoulli
// probabilities; nothing is binarized.
struct RbmModel {
  Tensor W;  // {n_visible, n_hidden}
  Tensor b;  // {n_visible} visible bias
  Tensor c;  // {n_hidden} hidden bias

  std::size_t n_visible() const { return b.size(); }
  std::size_t n_hidden() const { return c.size(); }
};

void validate(const RbmModel& m);

// Gaussian weights (mean 0, sigma stddev), zero biases.
RbmModel make_rbm(std::size_t n_visible, std::size_t n_hidden, std::uint64_t seed,
                  double stddev = 0.01);

struct CdConfig {
  double epsilon = 0.001;      // learning rate
  std::size_t n_steps = 1;     // Gibbs chain length
  std::size_t epochs = 50;
  std::size_t minibatch = 10;
  std::uint64_t seed = 42;
  // Replaces every sampling step with the underlying probability so unit
  // tests can assert exact values.
  bool deterministic_mode = false;
};

// -b.v - c.h - v.W.h
double energy(const RbmModel& m, std::span<const double> v, std::span<const double> h);

// -b.v - sum_j softplus(c_j + (W^T v)_j), evaluated overflow-safe.
double free_energy(const RbmModel& m, std::span<const double> v);

std::vector<double> prob_h_given_v(const RbmModel& m, std::span<const double> v);
std::vector<double> prob_v_given_h(const RbmModel& m, std::span<const double> h);

struct Reconstruction {
  std::vector<double> h_state;
  std::vector<double> v_recon;
};

// One up-down pass: sample hidden from the data, then report the visible
// activation probabilities under that hidden state.
Reconstruction reconstruct(const RbmModel& m, std::span<const double> v, Rng& rng,
                           bool deterministic = false);

struct CdDelta {
  Tensor dW;  // {n_visible, n_hidden}
  Tensor db;  // {n_visible}
  Tensor dc;  // {n_hidden}
};

// One contrastive-divergence update on a minibatch (rows in [0,1]). Positive
// statistics use hidden probabilities; the chain samples hidden states and
// finishes on visible probabilities. The returned deltas are already applied.
CdDelta cd_update(RbmModel& m, const Tensor& minibatch, const CdConfig& config, Rng& rng);

// Mean log-likelihood with the partition function enumerated exactly.
// Refuses models with n_visible + n_hidden > 20.
double exact_log_likelihood(const RbmModel& m, const Tensor& data);

struct KlDiagnostic {
  double kl_0 = 0.0;  // KL(p_0 || p_inf)
  double kl_n = 0.0;  // KL(p_n || p_inf)
  double cd_n = 0.0;  // kl_0 - kl_n
};

// Evolves a distribution over all 2^n_visible states through n exact Gibbs
// sweeps and compares against the exact model distribution. p0 is indexed by
// visible state bits (bit i = unit i).
KlDiagnostic cd_kl_diagnostic(const RbmModel& m, const std::vector<double>& p0, std::size_t n);

// Deterministic hidden-probability features, one row per sample.
Tensor transform(const RbmModel& m, const Tensor& data);

struct RbmTrainResult {
  // Mean squared deterministic reconstruction error after each epoch.
  std::vector<double> epoch_recon_error;
};

// Shuffled minibatch CD training, in place.
RbmTrainResult train_rbm(RbmModel& m, const Tensor& data, const CdConfig& config);

Container to_container(const RbmModel& m);
RbmModel rbm_from_container(const Container& c);

}  // namespace deepgen
