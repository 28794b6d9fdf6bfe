#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "deepgen/container.hpp"
#include "deepgen/dataio.hpp"
#include "deepgen/layers.hpp"

namespace deepgen {

// One architecture family: a dense projection reshaped onto a coarse grid,
// nearest-neighbor upsampling to the full expression map, two hidden conv
// blocks, and a 1x1 head; the discriminator mirrors it with two conv blocks
// and two dense layers ending in a 2-unit sigmoid. The coarse grid keeps the
// dense width equal to the gene count, which forces channels = fy * fx.
struct ArchSpec {
  std::string dataset;    // free-form tag recorded in checkpoints
  std::size_t gene_count = 0;
  std::size_t rows = 0, cols = 0;  // expression map shape, rows*cols == gene_count
  std::size_t fy = 0, fx = 0;      // upsample factors; fy|rows, fx|cols
  std::size_t gconv1 = 0, gconv2 = 0;  // generator conv widths
  std::size_t dconv1 = 0, dconv2 = 0;  // discriminator conv widths
  std::size_t ddense = 0;              // discriminator hidden dense width
  std::size_t noise_dim = 100;
  double dropout_rate = 0.5;
  double leak = 0.2;

  std::size_t channels() const { return fy * fx; }  // pre-upsample channels
  std::size_t grid_rows() const { return rows / fy; }
  std::size_t grid_cols() const { return cols / fx; }
};

void validate(const ArchSpec& arch);

enum class Dataset { breast, prostate };

// Table-driven full-size architecture. The map shape is found by searching
// factorizations rows*cols == gene_count with fy|rows and fx|cols, taking the
// most nearly square (ties prefer rows > cols).
ArchSpec build_architecture(std::size_t gene_count, Dataset dataset);

// Small preset (8x8 map, 64 genes) for tests and desk-scale runs.
ArchSpec reduced_architecture();

// Same small widths fitted to another gene count (2x2 upsampling, so the
// count must be a multiple of 4).
ArchSpec reduced_architecture_for(std::size_t gene_count);

struct GanModel {
  ArchSpec arch;
  LayerStack generator;
  LayerStack discriminator;
  bool trained = false;
};

// Seeded Gaussian init (sigma 0.02) on all weights.
GanModel build_gan(const ArchSpec& arch, std::uint64_t seed);

// {m, genes} rows in [0,1] reshaped row-major onto {m, rows, cols, 1} maps.
Tensor maps_from_matrix(const Tensor& values, std::size_t rows, std::size_t cols);

// Forward through the generator. Noise is {m, noise_dim} in [0,1]. Train mode
// (used inside the training loop) runs batch norm on batch statistics and
// caches for backward; infer mode is read-only.
Tensor generate(GanModel& model, const Tensor& noise, Mode mode = Mode::infer,
                Rng* rng = nullptr);

// Forward through the discriminator; returns {m, 2} sigmoid scores, column 0
// real-ness and column 1 fake-ness.
Tensor discriminate(GanModel& model, const Tensor& maps, Mode mode = Mode::infer,
                    Rng* rng = nullptr);

// Column of real-ness scores from a {m, 2} score tensor.
std::vector<double> realness(const Tensor& scores);

struct GanLoss {
  double loss_d = 0.0;
  double loss_g = 0.0;
};

// Minmax bookkeeping on real-ness scores, clamped to [1e-7, 1-1e-7]:
// loss_d = -(mean log d_real + mean log(1 - d_fake)), and loss_g is
// mean log(1 - d_fake), or -mean log d_fake when non_saturating.
GanLoss gan_loss(std::span<const double> d_real, std::span<const double> d_fake,
                 bool non_saturating = false);

// Optimized objectives with their gradients w.r.t. the {m, 2} score tensor.
// The discriminator trains both units with cross-entropy: the first n_real
// rows target (1, 0), the rest (0, 1); each pool contributes its own mean.
// The generator objective reads only the real-ness column. Gradients are
// zeroed where the score clamp is active.
struct HeadLoss {
  double loss = 0.0;
  Tensor upstream;  // d loss / d scores
};
HeadLoss discriminator_loss(const Tensor& scores, std::size_t n_real);
HeadLoss generator_loss(const Tensor& scores, bool non_saturating = false);

// {m, dim} tensor of uniform [0,1) draws.
Tensor sample_noise(std::size_t m, std::size_t dim, Rng& rng);

struct GanTrainConfig {
  double alpha_d = 3e-5;
  double alpha_g = 3e-5;
  std::size_t k = 1;          // discriminator steps per generator step
  std::size_t minibatch = 10;
  std::size_t epochs = 8;
  std::uint64_t seed = 42;
  bool non_saturating = false;
};

struct TraceRow {
  std::size_t step = 0;  // global, shared by both phases
  char phase = 'd';      // 'd' or 'g'
  double loss = 0.0;
  double mean_real_score = 0.0;
  double mean_fake_score = 0.0;
};

struct GanTrace {
  std::vector<TraceRow> rows;
};

// CSV with header `step,phase,loss,mean_real_score,mean_fake_score`.
std::string trace_csv(const GanTrace& trace);

// Adversarial training: per epoch, k discriminator updates on half-real,
// half-generated minibatches, then one generator update with the
// discriminator frozen. Generator steps have no real pool, so their trace
// rows carry the latest discriminator-step real score forward.
GanTrace train_gan(GanModel& model, const Tensor& real_maps, const GanTrainConfig& config);
GanTrace train_gan(GanModel& model, const ExpressionMatrix& real_data,
                   const GanTrainConfig& config);

struct MembershipResult {
  std::vector<double> scores;  // real-ness per sample
  std::vector<int> in_class;   // 1 iff score >= threshold (tie is in-class)
};

// Scores membership of samples against the class the model was trained on.
MembershipResult classify_by_membership(GanModel& model, const ExpressionMatrix& samples,
                                        double threshold = 0.5);

Container to_container(const GanModel& m);
GanModel gan_from_container(const Container& c);

}  // namespace deepgen
