#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "deepgen/errors.hpp"
#include "deepgen/gan.hpp"
#include "deepgen/textutil.hpp"
#include "testutil.hpp"

using namespace deepgen;

namespace {

Tensor toy_maps(std::size_t n, const ArchSpec& arch, std::uint64_t seed) {
  Rng rng(seed);
  Tensor maps({n, arch.rows, arch.cols, 1});
  for (auto& v : maps.values()) v = rng.uniform();
  return maps;
}

ExpressionMatrix toy_em(std::size_t n, std::size_t genes, std::uint64_t seed) {
  Rng rng(seed);
  ExpressionMatrix em;
  em.values = Tensor({n, genes});
  for (auto& v : em.values.values()) v = rng.uniform();
  for (std::size_t s = 0; s < n; ++s) em.sample_ids.push_back("S" + std::to_string(s + 1));
  for (std::size_t g = 0; g < genes; ++g) em.gene_ids.push_back("g" + std::to_string(g + 1));
  return em;
}

std::vector<std::string> kinds_of(LayerStack& stack) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < stack.size(); ++i) out.push_back(stack.layer(i).kind());
  return out;
}

// Bitwise parameter comparison across both networks.
bool same_params(GanModel& x, GanModel& y) {
  const auto collect = [](GanModel& m) {
    std::vector<Tensor*> all = m.generator.params();
    for (Tensor* p : m.discriminator.params()) all.push_back(p);
    for (Tensor* s : m.generator.state()) all.push_back(s);
    for (Tensor* s : m.discriminator.state()) all.push_back(s);
    return all;
  };
  const auto ax = collect(x), ay = collect(y);
  if (ax.size() != ay.size()) return false;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    if (ax[i]->shape() != ay[i]->shape()) return false;
    if (ax[i]->values() != ay[i]->values()) return false;
  }
  return true;
}

template <typename E, typename Fn>
void expect_error(Fn&& fn, const std::string& needle) {
  try {
    fn();
    FAIL_CHECK("expected an exception mentioning '" << needle << "'");
  } catch (const E& e) {
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

std::vector<double> snapshot(const std::vector<Tensor*>& ts) {
  std::vector<double> flat;
  for (const Tensor* t : ts) flat.insert(flat.end(), t->values().begin(), t->values().end());
  return flat;
}

// Reimplementation of the published training schedule on top of the public
// forward/backward/loss functions, consuming one shared RNG in the same
// order. Any drift between this and train_gan is a real behaviour change.
GanTrace replay_train(GanModel& model, const Tensor& real_maps, const GanTrainConfig& cfg) {
  const ArchSpec& a = model.arch;
  const std::size_t n = real_maps.dim(0);
  const std::size_t mb = cfg.minibatch;
  const std::size_t map_size = a.rows * a.cols;
  Rng rng(cfg.seed);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n;

  GanTrace trace;
  std::size_t step = 1;
  double last_real_mean = 0.0;
  std::vector<Tensor> d_grads, g_grads;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t dstep = 0; dstep < cfg.k; ++dstep) {
      if (cursor + mb > n) {
        rng.shuffle(order);
        cursor = 0;
      }
      Tensor joint({2 * mb, a.rows, a.cols, 1});
      for (std::size_t r = 0; r < mb; ++r)
        std::copy(real_maps.data() + order[cursor + r] * map_size,
                  real_maps.data() + (order[cursor + r] + 1) * map_size,
                  joint.data() + r * map_size);
      cursor += mb;

      const Tensor noise = sample_noise(mb, a.noise_dim, rng);
      const Tensor fake = generate(model, noise, Mode::train, &rng);
      std::copy(fake.data(), fake.data() + fake.size(), joint.data() + mb * map_size);

      const Tensor scores = discriminate(model, joint, Mode::train, &rng);
      const auto all = realness(scores);
      const std::span<const double> dr(all.data(), mb), df(all.data() + mb, mb);
      const GanLoss gl = gan_loss(dr, df, cfg.non_saturating);

      const HeadLoss head = discriminator_loss(scores, mb);
      model.discriminator.backward(head.upstream, &d_grads);
      sgd_step(model.discriminator.params(), d_grads, cfg.alpha_d);

      const double mr = std::accumulate(dr.begin(), dr.end(), 0.0) / double(mb);
      const double mf = std::accumulate(df.begin(), df.end(), 0.0) / double(mb);
      last_real_mean = mr;
      trace.rows.push_back({step++, 'd', gl.loss_d, mr, mf});
    }

    const Tensor noise = sample_noise(mb, a.noise_dim, rng);
    const Tensor fake = generate(model, noise, Mode::train, &rng);
    const Tensor scores = discriminate(model, fake, Mode::train, &rng);
    const HeadLoss head = generator_loss(scores, cfg.non_saturating);
    const Tensor into_fake = model.discriminator.backward(head.upstream, nullptr);
    model.generator.backward(into_fake, &g_grads);
    sgd_step(model.generator.params(), g_grads, cfg.alpha_g);

    const auto df = realness(scores);
    const double mf = std::accumulate(df.begin(), df.end(), 0.0) / double(mb);
    trace.rows.push_back({step++, 'g', head.loss, last_real_mean, mf});
  }
  model.trained = true;
  return trace;
}

}  // namespace

TEST_CASE("full-size architecture presets pick nearly square maps") {
  const ArchSpec breast = build_architecture(40992, Dataset::breast);
  CHECK(breast.dataset == "breast");
  CHECK(breast.gene_count == 40992);
  CHECK(breast.rows == 224);
  CHECK(breast.cols == 183);
  CHECK(breast.fy == 32);
  CHECK(breast.fx == 3);
  CHECK(breast.channels() == 96);
  CHECK(breast.grid_rows() == 7);
  CHECK(breast.grid_cols() == 61);
  CHECK(breast.gconv1 == 48);
  CHECK(breast.gconv2 == 32);
  CHECK(breast.dconv1 == 32);
  CHECK(breast.dconv2 == 64);
  CHECK(breast.ddense == 64);
  CHECK(breast.noise_dim == 100);

  const ArchSpec prostate = build_architecture(12600, Dataset::prostate);
  CHECK(prostate.dataset == "prostate");
  CHECK(prostate.rows == 140);
  CHECK(prostate.cols == 90);
  CHECK(prostate.fy == 10);
  CHECK(prostate.fx == 10);
  CHECK(prostate.channels() == 100);
  CHECK(prostate.grid_rows() == 14);
  CHECK(prostate.grid_cols() == 9);
  CHECK(prostate.gconv1 == 50);
  CHECK(prostate.gconv2 == 25);
}

TEST_CASE("reduced architecture and its refits") {
  const ArchSpec r = reduced_architecture();
  CHECK(r.dataset == "reduced");
  CHECK(r.gene_count == 64);
  CHECK(r.rows == 8);
  CHECK(r.cols == 8);
  CHECK(r.fy == 2);
  CHECK(r.fx == 2);
  CHECK(r.channels() == 4);
  CHECK(r.grid_rows() == 4);
  CHECK(r.grid_cols() == 4);
  CHECK(r.gconv1 == 8);
  CHECK(r.gconv2 == 4);
  CHECK(r.dconv1 == 4);
  CHECK(r.dconv2 == 8);
  CHECK(r.ddense == 16);
  CHECK(r.noise_dim == 16);

  // 512 = 32*16 is the closest-to-square even-by-even factorization.
  const ArchSpec wide = reduced_architecture_for(512);
  CHECK(wide.rows == 32);
  CHECK(wide.cols == 16);

  // 12 ties between 2x6 and 6x2; the taller map wins.
  const ArchSpec tall = reduced_architecture_for(12);
  CHECK(tall.rows == 6);
  CHECK(tall.cols == 2);
}

TEST_CASE("unmappable gene counts name the nearest workable count") {
  expect_error<config_error>([] { build_architecture(40991, Dataset::breast); },
                             "nearest workable count is 40992");
  // 6 has no even-by-even factorization; 4 and 8 tie and the tie rounds down.
  expect_error<config_error>([] { reduced_architecture_for(6); },
                             "nearest workable count is 4");
}

TEST_CASE("architecture validation rejects inconsistent specs") {
  ArchSpec good = reduced_architecture();
  CHECK_NOTHROW(validate(good));

  ArchSpec a = good;
  a.rows = 4;  // 4*8 != 64
  CHECK_THROWS_AS(validate(a), config_error);

  a = good;
  a.fy = 3;  // does not divide rows
  CHECK_THROWS_AS(validate(a), config_error);

  a = good;
  a.gconv2 = 0;
  CHECK_THROWS_AS(validate(a), config_error);

  a = good;
  a.noise_dim = 0;
  CHECK_THROWS_AS(validate(a), config_error);

  a = good;
  a.dropout_rate = 1.0;
  CHECK_THROWS_AS(validate(a), config_error);

  a = good;
  a.leak = 0.0;
  CHECK_THROWS_AS(validate(a), config_error);

  a = good;
  a.gene_count = 0;
  a.rows = 0;
  a.cols = 0;
  CHECK_THROWS_AS(validate(a), config_error);
}

TEST_CASE("maps_from_matrix folds rows onto maps in gene order") {
  Tensor flat({2, 6});
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = double(i) / 16.0;
  const Tensor maps = maps_from_matrix(flat, 2, 3);
  REQUIRE(maps.rank() == 4);
  CHECK(maps.dim(0) == 2);
  CHECK(maps.dim(1) == 2);
  CHECK(maps.dim(2) == 3);
  CHECK(maps.dim(3) == 1);
  // Row-major: sample 1, map row 1, col 2 holds gene index 5 of sample 1.
  CHECK(maps[1 * 6 + 1 * 3 + 2] == flat.at(1, 5));
  CHECK(maps.values() == flat.values());

  CHECK_THROWS_AS(maps_from_matrix(Tensor({4}), 2, 3), dimension_error);
  expect_error<dimension_error>([&flat] { maps_from_matrix(flat, 2, 2); }, "cannot fold");
}

TEST_CASE("build_gan lays out the documented layer sequence") {
  GanModel m = build_gan(reduced_architecture(), 3);
  const std::vector<std::string> gk = {"dense",     "reshape", "batchnorm", "relu",
                                       "upsample",  "conv2d",  "batchnorm", "relu",
                                       "conv2d",    "batchnorm", "relu",    "conv2d",
                                       "sigmoid"};
  const std::vector<std::string> dk = {"conv2d", "leaky_relu", "dropout", "conv2d",
                                       "leaky_relu", "dropout", "reshape", "dense",
                                       "leaky_relu", "dropout", "dense",  "sigmoid"};
  CHECK(kinds_of(m.generator) == gk);
  CHECK(kinds_of(m.discriminator) == dk);
  CHECK_FALSE(m.trained);
}

TEST_CASE("build_gan is seed deterministic") {
  GanModel a = build_gan(reduced_architecture(), 17);
  GanModel b = build_gan(reduced_architecture(), 17);
  GanModel c = build_gan(reduced_architecture(), 18);
  CHECK(same_params(a, b));
  CHECK_FALSE(same_params(a, c));
}

TEST_CASE("generator and discriminator forward shapes and ranges") {
  GanModel m = build_gan(reduced_architecture(), 11);
  Rng rng(4);
  const Tensor noise = sample_noise(3, m.arch.noise_dim, rng);
  const Tensor maps = generate(m, noise);
  REQUIRE(maps.rank() == 4);
  CHECK(maps.dim(0) == 3);
  CHECK(maps.dim(1) == 8);
  CHECK(maps.dim(2) == 8);
  CHECK(maps.dim(3) == 1);
  for (double v : maps.values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }

  const Tensor scores = discriminate(m, maps);
  REQUIRE(scores.rank() == 2);
  CHECK(scores.dim(0) == 3);
  CHECK(scores.dim(1) == 2);
  for (double v : scores.values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }

  CHECK_THROWS_AS(generate(m, Tensor({3, 5})), dimension_error);
  Tensor bad_noise({1, m.arch.noise_dim});
  bad_noise[0] = 1.5;
  CHECK_THROWS_AS(generate(m, bad_noise), config_error);
  CHECK_THROWS_AS(discriminate(m, Tensor({2, 4, 4, 1})), dimension_error);
}

TEST_CASE("inference is read-only and repeatable") {
  GanModel m = build_gan(reduced_architecture(), 11);
  const Tensor maps = toy_maps(4, m.arch, 9);
  const auto before = snapshot(m.discriminator.state());
  const Tensor s1 = discriminate(m, maps);
  const Tensor s2 = discriminate(m, maps);
  CHECK(s1.values() == s2.values());
  CHECK(snapshot(m.discriminator.state()) == before);

  Rng rng(2);
  const Tensor noise = sample_noise(2, m.arch.noise_dim, rng);
  const auto gbefore = snapshot(m.generator.state());
  const Tensor g1 = generate(m, noise);
  const Tensor g2 = generate(m, noise);
  CHECK(g1.values() == g2.values());
  CHECK(snapshot(m.generator.state()) == gbefore);
}

TEST_CASE("realness extracts the first score column") {
  Tensor scores({2, 2});
  scores.at(0, 0) = 0.9;
  scores.at(0, 1) = 0.2;
  scores.at(1, 0) = 0.3;
  scores.at(1, 1) = 0.8;
  const auto r = realness(scores);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == 0.9);
  CHECK(r[1] == 0.3);
  CHECK_THROWS_AS(realness(Tensor({2, 3})), dimension_error);
}

TEST_CASE("minmax bookkeeping at the indifference point") {
  // d = 0.5 everywhere: loss_d = 2 log 2, so the value -loss_d sits at
  // -2 log 2, the theoretical optimum of the minmax game.
  const std::vector<double> half(5, 0.5);
  const GanLoss l = gan_loss(half, half);
  CHECK(l.loss_d == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(-l.loss_d == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(l.loss_g == doctest::Approx(std::log(0.5)).epsilon(1e-15));

  const GanLoss ns = gan_loss(half, half, true);
  CHECK(ns.loss_d == l.loss_d);
  CHECK(ns.loss_g == doctest::Approx(-std::log(0.5)).epsilon(1e-15));
}

TEST_CASE("minmax bookkeeping uses per-pool means and survives saturated scores") {
  const std::vector<double> real = {0.9, 0.8};
  const std::vector<double> fake = {0.2};
  const GanLoss l = gan_loss(real, fake);
  const double want_d = -((std::log(0.9) + std::log(0.8)) / 2.0 + std::log(1.0 - 0.2));
  CHECK(l.loss_d == doctest::Approx(want_d).epsilon(1e-15));
  CHECK(l.loss_g == doctest::Approx(std::log(1.0 - 0.2)).epsilon(1e-15));

  // Hard 0/1 scores clamp to [1e-7, 1-1e-7] instead of producing infinities.
  const std::vector<double> ones = {1.0};
  const std::vector<double> zeros = {0.0};
  const GanLoss best = gan_loss(ones, zeros);
  CHECK(std::isfinite(best.loss_d));
  CHECK(best.loss_d == doctest::Approx(-2.0 * std::log(1.0 - 1e-7)).epsilon(1e-12));
  const GanLoss worst = gan_loss(zeros, ones);
  CHECK(std::isfinite(worst.loss_d));
  const double want_worst = -(std::log(1e-7) + std::log(1.0 - (1.0 - 1e-7)));
  CHECK(worst.loss_d == doctest::Approx(want_worst).epsilon(1e-12));

  CHECK_THROWS_AS(gan_loss({}, fake), config_error);
  CHECK_THROWS_AS(gan_loss(real, {}), config_error);
}

TEST_CASE("discriminator head loss matches hand-computed cross-entropy") {
  Tensor scores({2, 2});
  scores.at(0, 0) = 0.9;   // real sample, real-ness unit
  scores.at(0, 1) = 0.1;   // real sample, fake-ness unit
  scores.at(1, 0) = 0.3;   // generated sample
  scores.at(1, 1) = 0.6;
  const HeadLoss h = discriminator_loss(scores, 1);
  const double want =
      -(std::log(0.9) + std::log(1.0 - 0.1)) - (std::log(1.0 - 0.3) + std::log(0.6));
  CHECK(h.loss == doctest::Approx(want).epsilon(1e-15));
  CHECK(h.upstream.at(0, 0) == doctest::Approx(-1.0 / 0.9).epsilon(1e-15));
  CHECK(h.upstream.at(0, 1) == doctest::Approx(1.0 / (1.0 - 0.1)).epsilon(1e-15));
  CHECK(h.upstream.at(1, 0) == doctest::Approx(1.0 / (1.0 - 0.3)).epsilon(1e-15));
  CHECK(h.upstream.at(1, 1) == doctest::Approx(-1.0 / 0.6).epsilon(1e-15));

  CHECK_THROWS_AS(discriminator_loss(scores, 3), dimension_error);
  CHECK_THROWS_AS(discriminator_loss(Tensor({2, 3}), 1), dimension_error);
}

TEST_CASE("discriminator head loss gradient agrees with finite differences") {
  Rng rng(21);
  Tensor scores = testutil::random_tensor({6, 2}, rng, 0.05, 0.95);
  const HeadLoss h = discriminator_loss(scores, 2);
  const double err = testutil::max_grad_err(
      scores, h.upstream, [&scores] { return discriminator_loss(scores, 2).loss; });
  CHECK(err < 1e-6);
}

TEST_CASE("discriminator head loss zeroes gradients where the clamp bites") {
  Tensor scores({2, 2});
  scores.at(0, 0) = 1.0;  // clamped real-ness
  scores.at(0, 1) = 0.2;
  scores.at(1, 0) = 0.4;
  scores.at(1, 1) = 0.0;  // clamped fake-ness
  const HeadLoss h = discriminator_loss(scores, 1);
  CHECK(std::isfinite(h.loss));
  CHECK(h.upstream.at(0, 0) == 0.0);
  CHECK(h.upstream.at(1, 1) == 0.0);
  CHECK(h.upstream.at(0, 1) != 0.0);
  CHECK(h.upstream.at(1, 0) != 0.0);
}

TEST_CASE("single-pool discriminator batches are averaged over their own pool") {
  Tensor scores({2, 2});
  scores.at(0, 0) = 0.7;
  scores.at(0, 1) = 0.2;
  scores.at(1, 0) = 0.6;
  scores.at(1, 1) = 0.1;
  const HeadLoss all_real = discriminator_loss(scores, 2);
  const double want = (-(std::log(0.7) + std::log(1.0 - 0.2)) +
                       -(std::log(0.6) + std::log(1.0 - 0.1))) /
                      2.0;
  CHECK(all_real.loss == doctest::Approx(want).epsilon(1e-15));
  const HeadLoss all_fake = discriminator_loss(scores, 0);
  const double want_fake = (-(std::log(1.0 - 0.7) + std::log(0.2)) +
                            -(std::log(1.0 - 0.6) + std::log(0.1))) /
                           2.0;
  CHECK(all_fake.loss == doctest::Approx(want_fake).epsilon(1e-15));
}

TEST_CASE("generator head loss in both modes") {
  Tensor scores({2, 2});
  scores.at(0, 0) = 0.3;
  scores.at(0, 1) = 0.9;
  scores.at(1, 0) = 0.6;
  scores.at(1, 1) = 0.2;

  const HeadLoss sat = generator_loss(scores, false);
  CHECK(sat.loss ==
        doctest::Approx((std::log(1.0 - 0.3) + std::log(1.0 - 0.6)) / 2.0).epsilon(1e-15));
  CHECK(sat.upstream.at(0, 0) == doctest::Approx(-0.5 / (1.0 - 0.3)).epsilon(1e-15));
  CHECK(sat.upstream.at(1, 0) == doctest::Approx(-0.5 / (1.0 - 0.6)).epsilon(1e-15));
  // Only the real-ness column drives the generator.
  CHECK(sat.upstream.at(0, 1) == 0.0);
  CHECK(sat.upstream.at(1, 1) == 0.0);

  const HeadLoss ns = generator_loss(scores, true);
  CHECK(ns.loss == doctest::Approx(-(std::log(0.3) + std::log(0.6)) / 2.0).epsilon(1e-15));
  CHECK(ns.upstream.at(0, 0) == doctest::Approx(-0.5 / 0.3).epsilon(1e-15));
  CHECK(ns.upstream.at(1, 0) == doctest::Approx(-0.5 / 0.6).epsilon(1e-15));

  CHECK_THROWS_AS(generator_loss(Tensor({4}), false), dimension_error);
}

TEST_CASE("generator head loss gradient agrees with finite differences") {
  Rng rng(22);
  for (bool non_sat : {false, true}) {
    Tensor scores = testutil::random_tensor({5, 2}, rng, 0.05, 0.95);
    const HeadLoss h = generator_loss(scores, non_sat);
    const double err = testutil::max_grad_err(
        scores, h.upstream,
        [&scores, non_sat] { return generator_loss(scores, non_sat).loss; });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("sample_noise fills the unit interval deterministically") {
  Rng a(5), b(5), c(6);
  const Tensor na = sample_noise(4, 7, a);
  const Tensor nb = sample_noise(4, 7, b);
  const Tensor nc = sample_noise(4, 7, c);
  REQUIRE(na.rank() == 2);
  CHECK(na.dim(0) == 4);
  CHECK(na.dim(1) == 7);
  for (double v : na.values()) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
  CHECK(na.values() == nb.values());
  CHECK(na.values() != nc.values());
}

TEST_CASE("train_gan validates its configuration") {
  GanModel m = build_gan(reduced_architecture(), 7);
  const Tensor maps = toy_maps(12, m.arch, 31);
  GanTrainConfig cfg;
  cfg.epochs = 1;

  GanTrainConfig bad = cfg;
  bad.k = 0;
  CHECK_THROWS_AS(train_gan(m, maps, bad), config_error);

  bad = cfg;
  bad.alpha_d = 0.0;
  CHECK_THROWS_AS(train_gan(m, maps, bad), config_error);

  bad = cfg;
  bad.alpha_g = -1.0;
  CHECK_THROWS_AS(train_gan(m, maps, bad), config_error);

  bad = cfg;
  bad.minibatch = 0;
  CHECK_THROWS_AS(train_gan(m, maps, bad), config_error);

  bad = cfg;
  bad.minibatch = 13;
  expect_error<config_error>([&] { train_gan(m, maps, bad); }, "larger than the");

  CHECK_THROWS_AS(train_gan(m, Tensor({4, 4, 4, 1}), cfg), dimension_error);

  Tensor out_of_range = toy_maps(12, m.arch, 31);
  out_of_range[0] = 1.5;
  CHECK_THROWS_AS(train_gan(m, out_of_range, cfg), config_error);

  CHECK_FALSE(m.trained);  // every rejected call left the model untouched
}

TEST_CASE("train_gan replays exactly on the public primitives") {
  const ArchSpec arch = reduced_architecture();
  const Tensor maps = toy_maps(13, arch, 40);  // odd count forces mid-epoch reshuffles
  GanTrainConfig cfg;
  cfg.epochs = 3;
  cfg.k = 2;
  cfg.minibatch = 4;
  cfg.alpha_d = 1e-3;
  cfg.alpha_g = 1e-3;
  cfg.seed = 77;

  GanModel trained = build_gan(arch, 55);
  GanModel replayed = build_gan(arch, 55);
  const GanTrace t1 = train_gan(trained, maps, cfg);
  const GanTrace t2 = replay_train(replayed, maps, cfg);

  CHECK(same_params(trained, replayed));
  CHECK(trained.trained);
  REQUIRE(t1.rows.size() == t2.rows.size());
  for (std::size_t i = 0; i < t1.rows.size(); ++i) {
    CHECK(t1.rows[i].step == t2.rows[i].step);
    CHECK(t1.rows[i].phase == t2.rows[i].phase);
    CHECK(t1.rows[i].loss == t2.rows[i].loss);
    CHECK(t1.rows[i].mean_real_score == t2.rows[i].mean_real_score);
    CHECK(t1.rows[i].mean_fake_score == t2.rows[i].mean_fake_score);
  }
}

TEST_CASE("trace layout: k discriminator rows then one generator row per epoch") {
  GanModel m = build_gan(reduced_architecture(), 19);
  const Tensor maps = toy_maps(10, m.arch, 41);
  GanTrainConfig cfg;
  cfg.epochs = 4;
  cfg.k = 3;
  cfg.minibatch = 5;
  cfg.seed = 9;
  const GanTrace trace = train_gan(m, maps, cfg);

  REQUIRE(trace.rows.size() == cfg.epochs * (cfg.k + 1));
  for (std::size_t i = 0; i < trace.rows.size(); ++i)
    CHECK(trace.rows[i].step == i + 1);  // one shared step counter
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const std::size_t base = e * (cfg.k + 1);
    for (std::size_t d = 0; d < cfg.k; ++d) CHECK(trace.rows[base + d].phase == 'd');
    const TraceRow& g = trace.rows[base + cfg.k];
    CHECK(g.phase == 'g');
    // Generator steps score no real pool; the last discriminator measurement
    // rides along instead.
    CHECK(g.mean_real_score == trace.rows[base + cfg.k - 1].mean_real_score);
  }
}

TEST_CASE("discriminator trained on matched pools settles near one half") {
  // When both pools come from one distribution the optimal response scores
  // everything p/(p+p) = 1/2; repeated cross-entropy steps must not drift
  // away from it.
  GanModel m = build_gan(reduced_architecture(), 23);
  Rng rng(67);
  const std::size_t mb = 6;

  for (int step = 0; step < 100; ++step) {
    Tensor joint = toy_maps(2 * mb, m.arch, rng.next());
    const Tensor scores = discriminate(m, joint, Mode::train, &rng);
    const HeadLoss hl = discriminator_loss(scores, mb);
    std::vector<Tensor> grads;
    m.discriminator.backward(hl.upstream, &grads);
    sgd_step(m.discriminator.params(), grads, 0.1);
  }

  for (std::uint64_t pool_seed : {901u, 902u}) {
    const Tensor pool = toy_maps(16, m.arch, pool_seed);
    const Tensor scores = discriminate(m, pool, Mode::infer);
    const auto real = realness(scores);
    const double mean = std::accumulate(real.begin(), real.end(), 0.0) / real.size();
    CHECK(mean >= 0.4);
    CHECK(mean <= 0.6);
  }
}

TEST_CASE("training is seed reproducible and seed sensitive") {
  const ArchSpec arch = reduced_architecture();
  const Tensor maps = toy_maps(8, arch, 50);
  GanTrainConfig cfg;
  cfg.epochs = 2;
  cfg.minibatch = 4;

  GanModel a = build_gan(arch, 1);
  GanModel b = build_gan(arch, 1);
  const GanTrace ta = train_gan(a, maps, cfg);
  const GanTrace tb = train_gan(b, maps, cfg);
  CHECK(same_params(a, b));
  REQUIRE(ta.rows.size() == tb.rows.size());
  CHECK(ta.rows.back().loss == tb.rows.back().loss);

  GanModel c = build_gan(arch, 1);
  GanTrainConfig other = cfg;
  other.seed = 43;
  train_gan(c, maps, other);
  CHECK_FALSE(same_params(a, c));
}

TEST_CASE("expression-matrix overload folds samples onto maps") {
  const ArchSpec arch = reduced_architecture();
  const ExpressionMatrix em = toy_em(8, 64, 60);
  GanTrainConfig cfg;
  cfg.epochs = 1;
  cfg.minibatch = 4;

  GanModel via_em = build_gan(arch, 2);
  GanModel via_maps = build_gan(arch, 2);
  const GanTrace t1 = train_gan(via_em, em, cfg);
  const GanTrace t2 =
      train_gan(via_maps, maps_from_matrix(em.values, arch.rows, arch.cols), cfg);
  CHECK(same_params(via_em, via_maps));
  CHECK(t1.rows.back().loss == t2.rows.back().loss);

  ExpressionMatrix narrow = toy_em(8, 60, 61);
  expect_error<dimension_error>([&] { train_gan(via_em, narrow, cfg); }, "cannot fold");
}

TEST_CASE("trace_csv prints full-precision rows under a fixed header") {
  GanTrace trace;
  trace.rows.push_back({1, 'd', 1.5, 0.5, 0.25});
  trace.rows.push_back({2, 'g', 0.125, 0.5, 0.75});
  CHECK(trace_csv(trace) ==
        "step,phase,loss,mean_real_score,mean_fake_score\n"
        "1,d,1.5,0.5,0.25\n"
        "2,g,0.125,0.5,0.75\n");
  CHECK(trace_csv(GanTrace{}) == "step,phase,loss,mean_real_score,mean_fake_score\n");
}

TEST_CASE("membership scoring mirrors inference on the real-ness column") {
  const ArchSpec arch = reduced_architecture();
  GanModel m = build_gan(arch, 23);
  const ExpressionMatrix em = toy_em(6, 64, 70);

  CHECK_THROWS_AS(classify_by_membership(m, em), state_error);

  GanTrainConfig cfg;
  cfg.epochs = 2;
  cfg.minibatch = 3;
  train_gan(m, em, cfg);

  const MembershipResult res = classify_by_membership(m, em);
  REQUIRE(res.scores.size() == 6);
  REQUIRE(res.in_class.size() == 6);
  const Tensor maps = maps_from_matrix(em.values, arch.rows, arch.cols);
  const auto direct = realness(discriminate(m, maps));
  CHECK(res.scores == direct);
  for (std::size_t i = 0; i < res.scores.size(); ++i)
    CHECK(res.in_class[i] == (res.scores[i] >= 0.5 ? 1 : 0));

  // A threshold sitting exactly on a score counts as in-class.
  const MembershipResult at = classify_by_membership(m, em, res.scores[0]);
  CHECK(at.in_class[0] == 1);
  // Everything clears a zero threshold, nothing clears a threshold above one.
  const MembershipResult lo = classify_by_membership(m, em, 0.0);
  CHECK(std::accumulate(lo.in_class.begin(), lo.in_class.end(), 0) == 6);
  const MembershipResult hi = classify_by_membership(m, em, 1.1);
  CHECK(std::accumulate(hi.in_class.begin(), hi.in_class.end(), 0) == 0);

  ExpressionMatrix raw = em;
  raw.values[0] = -0.25;
  CHECK_THROWS_AS(classify_by_membership(m, raw), config_error);
}

TEST_CASE("gan container round trip preserves behaviour bit for bit") {
  const ArchSpec arch = reduced_architecture();
  GanModel m = build_gan(arch, 29);
  GanTrainConfig cfg;
  cfg.epochs = 2;
  cfg.minibatch = 4;
  train_gan(m, toy_maps(8, arch, 80), cfg);

  const Container c = to_container(m);
  CHECK(c.kind == "gan");
  CHECK(c.meta_value("dataset") == "reduced");
  CHECK(c.meta_value("rows") == "8");
  CHECK(c.meta_value("cols") == "8");
  CHECK(c.meta_value("trained") == "1");

  std::stringstream buf;
  write_container(buf, c);
  GanModel back = gan_from_container(read_container(buf));
  CHECK(back.trained);
  CHECK(back.arch.gene_count == 64);
  CHECK(back.arch.noise_dim == arch.noise_dim);
  CHECK(same_params(m, back));

  Rng rng(3);
  const Tensor noise = sample_noise(3, arch.noise_dim, rng);
  const Tensor fake_a = generate(m, noise);
  const Tensor fake_b = generate(back, noise);
  CHECK(fake_a.values() == fake_b.values());
  const Tensor scores_a = discriminate(m, fake_a);
  const Tensor scores_b = discriminate(back, fake_b);
  CHECK(scores_a.values() == scores_b.values());

  Container wrong = c;
  wrong.kind = "rbm";
  CHECK_THROWS_AS(gan_from_container(wrong), format_error);
}

TEST_CASE("untrained containers restore as untrained") {
  GanModel fresh = build_gan(reduced_architecture(), 31);
  const Container c = to_container(fresh);
  CHECK(c.meta_value("trained") == "0");
  GanModel back = gan_from_container(c);
  CHECK_FALSE(back.trained);
  CHECK(same_params(fresh, back));
}
