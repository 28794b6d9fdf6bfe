#include "deepgen/gan.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <utility>

#include "deepgen/errors.hpp"
#include "deepgen/textutil.hpp"

namespace deepgen {
namespace {

constexpr double kScoreClamp = 1e-7;
constexpr double kInitStddev = 0.02;

double clamp_score(double s) { return std::clamp(s, kScoreClamp, 1.0 - kScoreClamp); }

bool clamp_active(double s) { return s < kScoreClamp || s > 1.0 - kScoreClamp; }

void check_unit_interval(const Tensor& t, const char* what) {
  for (double v : t.values()) {
    if (!(v >= 0.0 && v <= 1.0))
      throw config_error(std::string(what) + " must lie in [0,1], got " + format_full(v));
  }
}

void check_scores(const Tensor& scores) {
  if (scores.rank() != 2 || scores.dim(1) != 2)
    throw dimension_error("scores must be {m, 2}, got " + scores.shape_str());
}

std::size_t round_to_multiple(std::size_t value, std::size_t unit) {
  const std::size_t down = value / unit * unit;
  const std::size_t up = down + unit;
  if (down == 0) return up;
  return value - down <= up - value ? down : up;
}

// rows = fy*a, cols = fx*b with rows*cols == gene_count. Most nearly square
// wins; on a tie the taller map does.
void choose_map(ArchSpec& arch, std::size_t gene_count) {
  arch.gene_count = gene_count;
  bool found = false;
  std::size_t best_rows = 0, best_cols = 0, best_gap = 0;
  for (std::size_t rows = arch.fy; rows <= gene_count; rows += arch.fy) {
    if (gene_count % rows != 0) continue;
    const std::size_t cols = gene_count / rows;
    if (cols % arch.fx != 0) continue;
    const std::size_t gap = rows > cols ? rows - cols : cols - rows;
    const bool better = !found || gap < best_gap || (gap == best_gap && rows > best_rows);
    if (better) {
      best_rows = rows;
      best_cols = cols;
      best_gap = gap;
      found = true;
    }
  }
  if (!found) {
    const std::size_t unit = arch.fy * arch.fx;
    throw config_error("gene count " + std::to_string(gene_count) +
                       " cannot be mapped with upsample factors (" + std::to_string(arch.fy) +
                       ", " + std::to_string(arch.fx) + "); nearest workable count is " +
                       std::to_string(round_to_multiple(gene_count, unit)));
  }
  arch.rows = best_rows;
  arch.cols = best_cols;
}

}  // namespace

void validate(const ArchSpec& arch) {
  if (arch.gene_count == 0 || arch.rows == 0 || arch.cols == 0)
    throw config_error("architecture needs positive map dimensions");
  if (arch.rows * arch.cols != arch.gene_count)
    throw config_error("map " + std::to_string(arch.rows) + "x" + std::to_string(arch.cols) +
                       " does not cover " + std::to_string(arch.gene_count) + " genes");
  if (arch.fy == 0 || arch.fx == 0 || arch.rows % arch.fy != 0 || arch.cols % arch.fx != 0)
    throw config_error("upsample factors (" + std::to_string(arch.fy) + ", " +
                       std::to_string(arch.fx) + ") must divide the map shape");
  if (arch.gconv1 == 0 || arch.gconv2 == 0 || arch.dconv1 == 0 || arch.dconv2 == 0 ||
      arch.ddense == 0)
    throw config_error("layer widths must be positive");
  if (arch.noise_dim == 0) throw config_error("noise dimension must be positive");
  if (arch.dropout_rate < 0.0 || arch.dropout_rate >= 1.0)
    throw config_error("dropout rate must lie in [0, 1)");
  if (arch.leak <= 0.0 || arch.leak >= 1.0) throw config_error("leak must lie in (0, 1)");
}

ArchSpec build_architecture(std::size_t gene_count, Dataset dataset) {
  ArchSpec arch;
  if (dataset == Dataset::breast) {
    arch.dataset = "breast";
    arch.fy = 32;
    arch.fx = 3;
    arch.gconv1 = 48;
    arch.gconv2 = 32;
  } else {
    arch.dataset = "prostate";
    arch.fy = 10;
    arch.fx = 10;
    arch.gconv1 = 50;
    arch.gconv2 = 25;
  }
  arch.dconv1 = 32;
  arch.dconv2 = 64;
  arch.ddense = 64;
  arch.noise_dim = 100;
  choose_map(arch, gene_count);
  validate(arch);
  return arch;
}

ArchSpec reduced_architecture_for(std::size_t gene_count) {
  ArchSpec arch;
  arch.dataset = "reduced";
  arch.fy = 2;
  arch.fx = 2;
  arch.gconv1 = 8;
  arch.gconv2 = 4;
  arch.dconv1 = 4;
  arch.dconv2 = 8;
  arch.ddense = 16;
  arch.noise_dim = 16;
  choose_map(arch, gene_count);
  validate(arch);
  return arch;
}

ArchSpec reduced_architecture() { return reduced_architecture_for(64); }

GanModel build_gan(const ArchSpec& arch, std::uint64_t seed) {
  validate(arch);
  GanModel m;
  m.arch = arch;
  std::uint64_t stream = 0;
  const auto next_rng = [&seed, &stream] { return Rng(mix_seed(seed, stream++)); };

  auto dense = [&next_rng](std::size_t in, std::size_t out) {
    auto l = std::make_unique<DenseLayer>(in, out);
    Rng rng = next_rng();
    l->init(rng, kInitStddev);
    return l;
  };
  auto conv = [&next_rng](std::size_t k, std::size_t cin, std::size_t cout) {
    auto l = std::make_unique<Conv2dLayer>(k, cin, cout);
    Rng rng = next_rng();
    l->init(rng, kInitStddev);
    return l;
  };

  LayerStack& g = m.generator;
  g.add(dense(arch.noise_dim, arch.gene_count));
  g.add(std::make_unique<ReshapeLayer>(Shape{arch.grid_rows(), arch.grid_cols(),
                                             arch.channels()}));
  g.add(std::make_unique<BatchNormLayer>(arch.channels()));
  g.add(std::make_unique<ActivationLayer>(Activation::relu));
  g.add(std::make_unique<UpsampleLayer>(arch.fy, arch.fx));
  g.add(conv(3, arch.channels(), arch.gconv1));
  g.add(std::make_unique<BatchNormLayer>(arch.gconv1));
  g.add(std::make_unique<ActivationLayer>(Activation::relu));
  g.add(conv(3, arch.gconv1, arch.gconv2));
  g.add(std::make_unique<BatchNormLayer>(arch.gconv2));
  g.add(std::make_unique<ActivationLayer>(Activation::relu));
  g.add(conv(1, arch.gconv2, 1));
  g.add(std::make_unique<ActivationLayer>(Activation::sigmoid));

  LayerStack& d = m.discriminator;
  d.add(conv(3, 1, arch.dconv1));
  d.add(std::make_unique<ActivationLayer>(Activation::leaky_relu, arch.leak));
  d.add(std::make_unique<DropoutLayer>(arch.dropout_rate));
  d.add(conv(3, arch.dconv1, arch.dconv2));
  d.add(std::make_unique<ActivationLayer>(Activation::leaky_relu, arch.leak));
  d.add(std::make_unique<DropoutLayer>(arch.dropout_rate));
  d.add(ReshapeLayer::flatten(arch.rows * arch.cols * arch.dconv2));
  d.add(dense(arch.rows * arch.cols * arch.dconv2, arch.ddense));
  d.add(std::make_unique<ActivationLayer>(Activation::leaky_relu, arch.leak));
  d.add(std::make_unique<DropoutLayer>(arch.dropout_rate));
  d.add(dense(arch.ddense, 2));
  d.add(std::make_unique<ActivationLayer>(Activation::sigmoid));
  return m;
}

Tensor maps_from_matrix(const Tensor& values, std::size_t rows, std::size_t cols) {
  if (values.rank() != 2)
    throw dimension_error("expected {samples, genes}, got " + values.shape_str());
  if (values.dim(1) != rows * cols)
    throw dimension_error("cannot fold " + std::to_string(values.dim(1)) + " genes onto a " +
                          std::to_string(rows) + "x" + std::to_string(cols) + " map");
  return values.reshaped({values.dim(0), rows, cols, 1});
}

Tensor generate(GanModel& model, const Tensor& noise, Mode mode, Rng* rng) {
  if (noise.rank() != 2 || noise.dim(1) != model.arch.noise_dim)
    throw dimension_error("noise must be {m, " + std::to_string(model.arch.noise_dim) +
                          "}, got " + noise.shape_str());
  check_unit_interval(noise, "noise");
  return model.generator.forward(noise, mode, rng);
}

Tensor discriminate(GanModel& model, const Tensor& maps, Mode mode, Rng* rng) {
  const ArchSpec& a = model.arch;
  if (maps.rank() != 4 || maps.dim(1) != a.rows || maps.dim(2) != a.cols || maps.dim(3) != 1)
    throw dimension_error("maps must be {m, " + std::to_string(a.rows) + ", " +
                          std::to_string(a.cols) + ", 1}, got " + maps.shape_str());
  return model.discriminator.forward(maps, mode, rng);
}

std::vector<double> realness(const Tensor& scores) {
  check_scores(scores);
  std::vector<double> out(scores.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scores[i * 2];
  return out;
}

GanLoss gan_loss(std::span<const double> d_real, std::span<const double> d_fake,
                 bool non_saturating) {
  if (d_real.empty() || d_fake.empty())
    throw config_error("loss needs at least one score per pool");
  double log_real = 0.0, log_one_minus_fake = 0.0, log_fake = 0.0;
  for (double s : d_real) log_real += std::log(clamp_score(s));
  for (double s : d_fake) {
    log_one_minus_fake += std::log(1.0 - clamp_score(s));
    log_fake += std::log(clamp_score(s));
  }
  log_real /= static_cast<double>(d_real.size());
  log_one_minus_fake /= static_cast<double>(d_fake.size());
  log_fake /= static_cast<double>(d_fake.size());

  GanLoss loss;
  loss.loss_d = -(log_real + log_one_minus_fake);
  loss.loss_g = non_saturating ? -log_fake : log_one_minus_fake;
  return loss;
}

HeadLoss discriminator_loss(const Tensor& scores, std::size_t n_real) {
  check_scores(scores);
  const std::size_t m = scores.dim(0);
  if (n_real > m) throw dimension_error("n_real exceeds batch size");
  const std::size_t n_fake = m - n_real;

  HeadLoss out;
  out.upstream = Tensor(scores.shape());
  double real_sum = 0.0, fake_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const bool is_real = i < n_real;
    const double w = is_real ? 1.0 / static_cast<double>(n_real)
                             : 1.0 / static_cast<double>(n_fake);
    const double s0 = scores[i * 2], s1 = scores[i * 2 + 1];
    const double c0 = clamp_score(s0), c1 = clamp_score(s1);
    double sample_loss;
    if (is_real) {
      sample_loss = -(std::log(c0) + std::log(1.0 - c1));
      if (!clamp_active(s0)) out.upstream[i * 2] = -w / c0;
      if (!clamp_active(s1)) out.upstream[i * 2 + 1] = w / (1.0 - c1);
      real_sum += sample_loss;
    } else {
      sample_loss = -(std::log(1.0 - c0) + std::log(c1));
      if (!clamp_active(s0)) out.upstream[i * 2] = w / (1.0 - c0);
      if (!clamp_active(s1)) out.upstream[i * 2 + 1] = -w / c1;
      fake_sum += sample_loss;
    }
  }
  out.loss = 0.0;
  if (n_real > 0) out.loss += real_sum / static_cast<double>(n_real);
  if (n_fake > 0) out.loss += fake_sum / static_cast<double>(n_fake);
  check_finite(out.upstream, "discriminator loss");
  return out;
}

HeadLoss generator_loss(const Tensor& scores, bool non_saturating) {
  check_scores(scores);
  const std::size_t m = scores.dim(0);
  if (m == 0) throw dimension_error("empty score batch");
  HeadLoss out;
  out.upstream = Tensor(scores.shape());
  const double w = 1.0 / static_cast<double>(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double s0 = scores[i * 2];
    const double c0 = clamp_score(s0);
    if (non_saturating) {
      total += -std::log(c0);
      if (!clamp_active(s0)) out.upstream[i * 2] = -w / c0;
    } else {
      total += std::log(1.0 - c0);
      if (!clamp_active(s0)) out.upstream[i * 2] = -w / (1.0 - c0);
    }
  }
  out.loss = total * w;
  check_finite(out.upstream, "generator loss");
  return out;
}

Tensor sample_noise(std::size_t m, std::size_t dim, Rng& rng) {
  Tensor noise({m, dim});
  for (auto& v : noise.values()) v = rng.uniform();
  return noise;
}

std::string trace_csv(const GanTrace& trace) {
  std::ostringstream out;
  out << "step,phase,loss,mean_real_score,mean_fake_score\n";
  for (const auto& r : trace.rows) {
    out << r.step << ',' << r.phase << ',' << format_full(r.loss) << ','
        << format_full(r.mean_real_score) << ',' << format_full(r.mean_fake_score) << '\n';
  }
  return out.str();
}

GanTrace train_gan(GanModel& model, const Tensor& real_maps, const GanTrainConfig& config) {
  const ArchSpec& a = model.arch;
  if (config.k < 1) throw config_error("k must be at least 1");
  if (config.alpha_d <= 0.0 || config.alpha_g <= 0.0)
    throw config_error("learning rates must be positive");
  if (config.minibatch < 1) throw config_error("minibatch size must be at least 1");
  if (real_maps.rank() != 4 || real_maps.dim(1) != a.rows || real_maps.dim(2) != a.cols ||
      real_maps.dim(3) != 1)
    throw dimension_error("training maps must be {n, " + std::to_string(a.rows) + ", " +
                          std::to_string(a.cols) + ", 1}, got " + real_maps.shape_str());
  const std::size_t n = real_maps.dim(0);
  if (config.minibatch > n)
    throw config_error("minibatch " + std::to_string(config.minibatch) + " larger than the " +
                       std::to_string(n) + "-sample dataset");
  check_unit_interval(real_maps, "training maps");

  const std::size_t mb = config.minibatch;
  const std::size_t map_size = a.rows * a.cols;
  Rng rng(config.seed);

  // Without-replacement sampling: walk a shuffled order, reshuffling whenever
  // fewer than a full minibatch remains.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::size_t cursor = n;
  const auto next_batch_rows = [&]() {
    if (cursor + mb > n) {
      rng.shuffle(order);
      cursor = 0;
    }
    std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                  order.begin() + static_cast<std::ptrdiff_t>(cursor + mb));
    cursor += mb;
    return rows;
  };

  GanTrace trace;
  std::size_t step = 1;
  double last_real_mean = 0.0;
  std::vector<Tensor> d_grads, g_grads;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t dstep = 0; dstep < config.k; ++dstep) {
      const auto rows = next_batch_rows();
      Tensor joint({2 * mb, a.rows, a.cols, std::size_t{1}});
      for (std::size_t r = 0; r < mb; ++r)
        std::copy(real_maps.data() + rows[r] * map_size,
                  real_maps.data() + (rows[r] + 1) * map_size, joint.data() + r * map_size);

      const Tensor noise = sample_noise(mb, a.noise_dim, rng);
      const Tensor fake = generate(model, noise, Mode::train, &rng);
      std::copy(fake.data(), fake.data() + fake.size(), joint.data() + mb * map_size);

      const Tensor scores = discriminate(model, joint, Mode::train, &rng);
      const auto all = realness(scores);
      const std::span<const double> dr(all.data(), mb), df(all.data() + mb, mb);
      const GanLoss gl = gan_loss(dr, df, config.non_saturating);

      const HeadLoss head = discriminator_loss(scores, mb);
      model.discriminator.backward(head.upstream, &d_grads);
      sgd_step(model.discriminator.params(), d_grads, config.alpha_d);

      double mr = 0.0, mf = 0.0;
      for (double s : dr) mr += s;
      for (double s : df) mf += s;
      mr /= static_cast<double>(mb);
      mf /= static_cast<double>(mb);
      last_real_mean = mr;
      trace.rows.push_back({step++, 'd', gl.loss_d, mr, mf});
    }

    // Generator step: gradients flow through the frozen discriminator.
    const Tensor noise = sample_noise(mb, a.noise_dim, rng);
    const Tensor fake = generate(model, noise, Mode::train, &rng);
    const Tensor scores = discriminate(model, fake, Mode::train, &rng);
    const HeadLoss head = generator_loss(scores, config.non_saturating);
    const Tensor into_fake = model.discriminator.backward(head.upstream, nullptr);
    model.generator.backward(into_fake, &g_grads);
    sgd_step(model.generator.params(), g_grads, config.alpha_g);

    double mf = 0.0;
    const auto df = realness(scores);
    for (double s : df) mf += s;
    mf /= static_cast<double>(mb);
    trace.rows.push_back({step++, 'g', head.loss, last_real_mean, mf});
  }
  model.trained = true;
  return trace;
}

GanTrace train_gan(GanModel& model, const ExpressionMatrix& real_data,
                   const GanTrainConfig& config) {
  validate(real_data);
  return train_gan(model, maps_from_matrix(real_data.values, model.arch.rows, model.arch.cols),
                   config);
}

MembershipResult classify_by_membership(GanModel& model, const ExpressionMatrix& samples,
                                        double threshold) {
  if (!model.trained) throw state_error("membership scoring requires a trained model");
  validate(samples);
  check_unit_interval(samples.values, "membership samples");
  const Tensor maps = maps_from_matrix(samples.values, model.arch.rows, model.arch.cols);
  const Tensor scores = discriminate(model, maps, Mode::infer, nullptr);
  MembershipResult out;
  out.scores = realness(scores);
  out.in_class.reserve(out.scores.size());
  for (double s : out.scores) out.in_class.push_back(s >= threshold ? 1 : 0);
  return out;
}

Container to_container(const GanModel& m) {
  Container c;
  c.kind = "gan";
  const ArchSpec& a = m.arch;
  c.add_meta("dataset", a.dataset);
  c.add_meta("gene_count", std::to_string(a.gene_count));
  c.add_meta("rows", std::to_string(a.rows));
  c.add_meta("cols", std::to_string(a.cols));
  c.add_meta("fy", std::to_string(a.fy));
  c.add_meta("fx", std::to_string(a.fx));
  c.add_meta("gconv1", std::to_string(a.gconv1));
  c.add_meta("gconv2", std::to_string(a.gconv2));
  c.add_meta("dconv1", std::to_string(a.dconv1));
  c.add_meta("dconv2", std::to_string(a.dconv2));
  c.add_meta("ddense", std::to_string(a.ddense));
  c.add_meta("noise_dim", std::to_string(a.noise_dim));
  c.add_meta("dropout_rate", format_full(a.dropout_rate));
  c.add_meta("leak", format_full(a.leak));
  c.add_meta("trained", m.trained ? "1" : "0");

  // Layer kinds are part of the manifest so a reader can sanity-check the
  // reconstruction without guessing.
  GanModel& mm = const_cast<GanModel&>(m);
  std::string gkinds, dkinds;
  for (std::size_t i = 0; i < mm.generator.size(); ++i) {
    if (i) gkinds += ',';
    gkinds += mm.generator.layer(i).kind();
  }
  for (std::size_t i = 0; i < mm.discriminator.size(); ++i) {
    if (i) dkinds += ',';
    dkinds += mm.discriminator.layer(i).kind();
  }
  c.add_meta("generator_layers", gkinds);
  c.add_meta("discriminator_layers", dkinds);

  std::size_t idx = 0;
  for (Tensor* p : mm.generator.params()) c.add_tensor("gp" + std::to_string(idx++), *p);
  idx = 0;
  for (Tensor* s : mm.generator.state()) c.add_tensor("gs" + std::to_string(idx++), *s);
  idx = 0;
  for (Tensor* p : mm.discriminator.params()) c.add_tensor("dp" + std::to_string(idx++), *p);
  idx = 0;
  for (Tensor* s : mm.discriminator.state()) c.add_tensor("ds" + std::to_string(idx++), *s);
  return c;
}

GanModel gan_from_container(const Container& c) {
  if (c.kind != "gan") throw format_error("container kind is " + c.kind + ", expected gan", 0);
  ArchSpec a;
  const auto meta_size = [&c](const char* key) {
    try {
      return static_cast<std::size_t>(std::stoul(c.meta_value(key)));
    } catch (const std::exception&) {
      throw format_error("bad numeric meta " + std::string(key) + " = " + c.meta_value(key), 0);
    }
  };
  a.dataset = c.meta_value("dataset");
  a.gene_count = meta_size("gene_count");
  a.rows = meta_size("rows");
  a.cols = meta_size("cols");
  a.fy = meta_size("fy");
  a.fx = meta_size("fx");
  a.gconv1 = meta_size("gconv1");
  a.gconv2 = meta_size("gconv2");
  a.dconv1 = meta_size("dconv1");
  a.dconv2 = meta_size("dconv2");
  a.ddense = meta_size("ddense");
  a.noise_dim = meta_size("noise_dim");
  a.dropout_rate = std::strtod(c.meta_value("dropout_rate").c_str(), nullptr);
  a.leak = std::strtod(c.meta_value("leak").c_str(), nullptr);

  GanModel m = build_gan(a, 0);
  m.trained = c.meta_value("trained") == "1";
  const auto restore = [&c](std::vector<Tensor*> slots, const char* prefix) {
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const Tensor& stored = c.tensor_named(prefix + std::to_string(i));
      if (!stored.same_shape(*slots[i]))
        throw format_error("tensor " + std::string(prefix) + std::to_string(i) +
                               " has shape " + stored.shape_str() + ", architecture needs " +
                               slots[i]->shape_str(),
                           0);
      *slots[i] = stored;
    }
  };
  restore(m.generator.params(), "gp");
  restore(m.generator.state(), "gs");
  restore(m.discriminator.params(), "dp");
  restore(m.discriminator.state(), "ds");
  return m;
}

}  // namespace deepgen
