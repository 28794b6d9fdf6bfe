#include "deepgen/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deepgen/errors.hpp"

namespace deepgen {
namespace {

double softplus(double x) {
  // log(1 + e^x) without overflow on either tail.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void check_unit_interval(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!(x >= 0.0 && x <= 1.0))
      throw config_error(std::string(what) + " must lie in [0,1], got " + std::to_string(x));
  }
}

void check_visible(const RbmModel& m, std::span<const double> v) {
  if (v.size() != m.n_visible())
    throw dimension_error("visible vector length " + std::to_string(v.size()) + ", model has " +
                          std::to_string(m.n_visible()));
}

void check_hidden(const RbmModel& m, std::span<const double> h) {
  if (h.size() != m.n_hidden())
    throw dimension_error("hidden vector length " + std::to_string(h.size()) + ", model has " +
                          std::to_string(m.n_hidden()));
}

std::span<const double> row(const Tensor& t, std::size_t r) {
  return {t.data() + r * t.dim(1), t.dim(1)};
}

void check_data_matrix(const RbmModel& m, const Tensor& data, const char* what) {
  if (data.rank() != 2 || data.dim(1) != m.n_visible())
    throw dimension_error(std::string(what) + ": expected {rows, " +
                          std::to_string(m.n_visible()) + "}, got " + data.shape_str());
  check_unit_interval({data.data(), data.size()}, what);
}

// Probability of binary hidden state `bits` under independent unit
// probabilities `p`.
double state_prob(const std::vector<double>& p, std::size_t bits) {
  double out = 1.0;
  for (std::size_t j = 0; j < p.size(); ++j)
    out *= (bits >> j & 1u) ? p[j] : 1.0 - p[j];
  return out;
}

std::vector<double> bits_to_vec(std::size_t bits, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(bits >> i & 1u);
  return v;
}

double log_sum_exp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void validate(const RbmModel& m) {
  if (m.W.rank() != 2 || m.b.rank() != 1 || m.c.rank() != 1)
    throw dimension_error("rbm tensors have wrong ranks");
  if (m.W.dim(0) != m.b.size() || m.W.dim(1) != m.c.size())
    throw dimension_error("rbm weight matrix " + m.W.shape_str() + " does not match biases (" +
                          std::to_string(m.b.size()) + ", " + std::to_string(m.c.size()) + ")");
  check_finite(m.W, "rbm weights");
  check_finite(m.b, "rbm visible bias");
  check_finite(m.c, "rbm hidden bias");
}

RbmModel make_rbm(std::size_t n_visible, std::size_t n_hidden, std::uint64_t seed,
                  double stddev) {
  if (n_visible == 0 || n_hidden == 0)
    throw config_error("rbm needs at least one visible and one hidden unit");
  if (stddev < 0.0) throw config_error("weight stddev must be non-negative");
  RbmModel m{Tensor({n_visible, n_hidden}), Tensor({n_visible}), Tensor({n_hidden})};
  Rng rng(seed);
  for (auto& w : m.W.values()) w = rng.normal(0.0, stddev);
  return m;
}

double energy(const RbmModel& m, std::span<const double> v, std::span<const double> h) {
  check_visible(m, v);
  check_hidden(m, h);
  double e = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) e -= m.b[i] * v[i];
  for (std::size_t j = 0; j < h.size(); ++j) e -= m.c[j] * h[j];
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    const double* wrow = m.W.data() + i * m.n_hidden();
    double acc = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) acc += wrow[j] * h[j];
    e -= v[i] * acc;
  }
  return e;
}

double free_energy(const RbmModel& m, std::span<const double> v) {
  check_visible(m, v);
  double f = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) f -= m.b[i] * v[i];
  for (std::size_t j = 0; j < m.n_hidden(); ++j) {
    double a = m.c[j];
    for (std::size_t i = 0; i < v.size(); ++i) a += v[i] * m.W[i * m.n_hidden() + j];
    f -= softplus(a);
  }
  return f;
}

std::vector<double> prob_h_given_v(const RbmModel& m, std::span<const double> v) {
  check_visible(m, v);
  std::vector<double> p(m.n_hidden());
  for (std::size_t j = 0; j < p.size(); ++j) {
    double a = m.c[j];
    for (std::size_t i = 0; i < v.size(); ++i) a += v[i] * m.W[i * m.n_hidden() + j];
    p[j] = sigmoid(a);
  }
  return p;
}

std::vector<double> prob_v_given_h(const RbmModel& m, std::span<const double> h) {
  check_hidden(m, h);
  std::vector<double> p(m.n_visible());
  for (std::size_t i = 0; i < p.size(); ++i) {
    double a = m.b[i];
    const double* wrow = m.W.data() + i * m.n_hidden();
    for (std::size_t j = 0; j < h.size(); ++j) a += wrow[j] * h[j];
    p[i] = sigmoid(a);
  }
  return p;
}

Reconstruction reconstruct(const RbmModel& m, std::span<const double> v, Rng& rng,
                           bool deterministic) {
  check_visible(m, v);
  check_unit_interval(v, "visible input");
  Reconstruction r;
  r.h_state = prob_h_given_v(m, v);
  if (!deterministic)
    for (auto& p : r.h_state) p = rng.bernoulli(p) ? 1.0 : 0.0;
  r.v_recon = prob_v_given_h(m, r.h_state);
  return r;
}

CdDelta cd_update(RbmModel& m, const Tensor& minibatch, const CdConfig& config, Rng& rng) {
  if (config.epsilon <= 0.0) throw config_error("learning rate must be positive");
  if (config.n_steps < 1) throw config_error("chain length must be at least 1");
  if (minibatch.rank() != 2 || minibatch.dim(0) == 0)
    throw config_error("cd_update needs a non-empty minibatch");
  check_data_matrix(m, minibatch, "cd_update minibatch");

  const std::size_t nv = m.n_visible(), nh = m.n_hidden();
  const std::size_t batch = minibatch.dim(0);
  CdDelta d{Tensor({nv, nh}), Tensor({nv}), Tensor({nh})};

  std::vector<double> h_cur;
  for (std::size_t r = 0; r < batch; ++r) {
    const auto v0 = row(minibatch, r);
    const std::vector<double> ph_data = prob_h_given_v(m, v0);

    h_cur = ph_data;
    if (!config.deterministic_mode)
      for (auto& p : h_cur) p = rng.bernoulli(p) ? 1.0 : 0.0;

    std::vector<double> v_cur, ph_cur;
    for (std::size_t step = 1; step <= config.n_steps; ++step) {
      v_cur = prob_v_given_h(m, h_cur);
      if (step < config.n_steps && !config.deterministic_mode)
        for (auto& p : v_cur) p = rng.bernoulli(p) ? 1.0 : 0.0;
      ph_cur = prob_h_given_v(m, v_cur);
      if (step < config.n_steps) {
        h_cur = ph_cur;
        if (!config.deterministic_mode)
          for (auto& p : h_cur) p = rng.bernoulli(p) ? 1.0 : 0.0;
      }
    }

    for (std::size_t i = 0; i < nv; ++i) {
      d.db[i] += v0[i] - v_cur[i];
      double* drow = d.dW.data() + i * nh;
      for (std::size_t j = 0; j < nh; ++j)
        drow[j] += v0[i] * ph_data[j] - v_cur[i] * ph_cur[j];
    }
    for (std::size_t j = 0; j < nh; ++j) d.dc[j] += ph_data[j] - ph_cur[j];
  }

  const double scale = config.epsilon / static_cast<double>(batch);
  for (auto& x : d.dW.values()) x *= scale;
  for (auto& x : d.db.values()) x *= scale;
  for (auto& x : d.dc.values()) x *= scale;

  for (std::size_t i = 0; i < m.W.size(); ++i) m.W[i] += d.dW[i];
  for (std::size_t i = 0; i < nv; ++i) m.b[i] += d.db[i];
  for (std::size_t j = 0; j < nh; ++j) m.c[j] += d.dc[j];
  validate(m);
  return d;
}

double exact_log_likelihood(const RbmModel& m, const Tensor& data) {
  const std::size_t nv = m.n_visible(), nh = m.n_hidden();
  if (nv + nh > 20)
    throw config_error("exact likelihood bounded to n_visible + n_hidden <= 20, got " +
                       std::to_string(nv + nh));
  if (data.rank() != 2 || data.dim(1) != nv)
    throw dimension_error("data must be {rows, " + std::to_string(nv) + "}, got " +
                          data.shape_str());
  if (data.dim(0) == 0) throw config_error("need at least one data row");

  const std::size_t n_states = std::size_t{1} << nv;
  std::vector<double> neg_f(n_states);
  for (std::size_t s = 0; s < n_states; ++s) {
    const auto v = bits_to_vec(s, nv);
    neg_f[s] = -free_energy(m, v);
  }
  const double log_z = log_sum_exp(neg_f);

  double total = 0.0;
  for (std::size_t r = 0; r < data.dim(0); ++r)
    total += -free_energy(m, row(data, r)) - log_z;
  return total / static_cast<double>(data.dim(0));
}

KlDiagnostic cd_kl_diagnostic(const RbmModel& m, const std::vector<double>& p0, std::size_t n) {
  const std::size_t nv = m.n_visible(), nh = m.n_hidden();
  if (nv + nh > 20)
    throw config_error("kl diagnostic bounded to n_visible + n_hidden <= 20, got " +
                       std::to_string(nv + nh));
  const std::size_t nsv = std::size_t{1} << nv;
  const std::size_t nsh = std::size_t{1} << nh;
  if (p0.size() != nsv)
    throw dimension_error("p0 must enumerate all " + std::to_string(nsv) + " visible states");
  double mass = 0.0;
  for (double p : p0) {
    if (p < 0.0) throw config_error("p0 has negative mass");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw config_error("p0 does not sum to 1");

  // A[v][h] = P(h|v), B[h][v] = P(v|h); one Gibbs sweep is p -> (pA)B.
  std::vector<double> a(nsv * nsh), bm(nsh * nsv);
  for (std::size_t s = 0; s < nsv; ++s) {
    const auto ph = prob_h_given_v(m, bits_to_vec(s, nv));
    for (std::size_t t = 0; t < nsh; ++t) a[s * nsh + t] = state_prob(ph, t);
  }
  for (std::size_t t = 0; t < nsh; ++t) {
    const auto pv = prob_v_given_h(m, bits_to_vec(t, nh));
    for (std::size_t s = 0; s < nsv; ++s) bm[t * nsv + s] = state_prob(pv, s);
  }

  std::vector<double> p_inf(nsv);
  for (std::size_t s = 0; s < nsv; ++s) p_inf[s] = -free_energy(m, bits_to_vec(s, nv));
  const double log_z = log_sum_exp(p_inf);
  for (auto& x : p_inf) x = std::exp(x - log_z);

  auto kl = [&p_inf](const std::vector<double>& p) {
    double out = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s)
      if (p[s] > 0.0) out += p[s] * std::log(p[s] / p_inf[s]);
    return out;
  };

  KlDiagnostic diag;
  diag.kl_0 = kl(p0);
  std::vector<double> p = p0, q(nsh);
  for (std::size_t step = 0; step < n; ++step) {
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t s = 0; s < nsv; ++s) {
      if (p[s] == 0.0) continue;
      const double* arow = a.data() + s * nsh;
      for (std::size_t t = 0; t < nsh; ++t) q[t] += p[s] * arow[t];
    }
    std::fill(p.begin(), p.end(), 0.0);
    for (std::size_t t = 0; t < nsh; ++t) {
      if (q[t] == 0.0) continue;
      const double* brow = bm.data() + t * nsv;
      for (std::size_t s = 0; s < nsv; ++s) p[s] += q[t] * brow[s];
    }
  }
  diag.kl_n = kl(p);
  diag.cd_n = diag.kl_0 - diag.kl_n;
  return diag;
}

Tensor transform(const RbmModel& m, const Tensor& data) {
  check_data_matrix(m, data, "transform input");
  Tensor out({data.dim(0), m.n_hidden()});
  for (std::size_t r = 0; r < data.dim(0); ++r) {
    const auto p = prob_h_given_v(m, row(data, r));
    std::copy(p.begin(), p.end(), out.data() + r * m.n_hidden());
  }
  return out;
}

RbmTrainResult train_rbm(RbmModel& m, const Tensor& data, const CdConfig& config) {
  check_data_matrix(m, data, "training data");
  if (config.minibatch < 1) throw config_error("minibatch size must be at least 1");
  if (data.dim(0) == 0) throw config_error("training data is empty");

  const std::size_t n = data.dim(0), nv = m.n_visible();
  Rng rng(config.seed);
  RbmTrainResult result;
  result.epoch_recon_error.reserve(config.epochs);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  Tensor batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += config.minibatch) {
      const std::size_t count = std::min(config.minibatch, n - start);
      batch = Tensor({count, nv});
      for (std::size_t r = 0; r < count; ++r) {
        const auto src = row(data, order[start + r]);
        std::copy(src.begin(), src.end(), batch.data() + r * nv);
      }
      cd_update(m, batch, config, rng);
    }

    double err = 0.0;
    Rng probe(0);  // deterministic pass; rng unused
    for (std::size_t r = 0; r < n; ++r) {
      const auto v = row(data, r);
      const auto rec = reconstruct(m, v, probe, true);
      for (std::size_t i = 0; i < nv; ++i) {
        const double dlt = v[i] - rec.v_recon[i];
        err += dlt * dlt;
      }
    }
    result.epoch_recon_error.push_back(err / static_cast<double>(n * nv));
  }
  return result;
}

Container to_container(const RbmModel& m) {
  validate(m);
  Container c;
  c.kind = "rbm";
  c.add_meta("n_visible", std::to_string(m.n_visible()));
  c.add_meta("n_hidden", std::to_string(m.n_hidden()));
  c.add_tensor("W", m.W);
  c.add_tensor("b", m.b);
  c.add_tensor("c", m.c);
  return c;
}

RbmModel rbm_from_container(const Container& c) {
  if (c.kind != "rbm") throw format_error("container kind is " + c.kind + ", expected rbm", 0);
  RbmModel m{c.tensor_named("W"), c.tensor_named("b"), c.tensor_named("c")};
  validate(m);
  return m;
}

}  // namespace deepgen
