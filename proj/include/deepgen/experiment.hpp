#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "deepgen/dataio.hpp"
#include "deepgen/metrics.hpp"

namespace deepgen {

// Flat key = value configuration. Files hold one pair per line with optional
// #-comment lines; later assignments (and flag overrides) win.
class KvConfig {
 public:
  static KvConfig from_stream(std::istream& in);
  static KvConfig from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::string& require(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Sorted `key = value` lines; what the manifest embeds.
  std::string echo() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Fully resolved run description. String fields keep the task grammar:
// task rbm_task1 | rbm_task2 | rbm_prostate | gan_task1 | gan_task2 | gan_task3,
// part 1a | 1b | 2a | 2b (GAN only), pipeline rbm_logistic | rbm_svm | gan.
struct ExperimentConfig {
  std::string task;
  std::string part;
  std::string pipeline;
  std::vector<std::string> data_paths;
  std::string data_format = "series_matrix";  // series_matrix | tsv_genes | tsv_samples
  std::string labels_path;
  std::string out_dir;
  std::string arch = "full";  // full | reduced (GAN only)

  double alpha = 0.001;       // RBM learning rate
  std::size_t noc = 200;      // RBM hidden units
  double logistic_c = 1.8;
  double svm_c = 1.0;
  double gamma = 0.06;
  double alpha_d = 3e-5;
  double alpha_g = 3e-5;
  std::size_t k = 1;
  std::size_t epochs = 0;     // 0 resolves to 50 (RBM) or 8 (GAN)
  double split = 0.5;
  std::size_t minibatch = 10;
  std::size_t cd_steps = 1;
  double threshold = 0.5;
  std::uint64_t seed = 42;

  bool is_gan() const { return task.rfind("gan_", 0) == 0; }
};

// Validates task/part/pipeline compatibility and ranges; fills defaults.
ExperimentConfig resolve_config(const KvConfig& kv);

// The resolved config as flat key = value pairs (defaults included), the
// exact content echoed into the manifest.
KvConfig to_kv(const ExperimentConfig& config);

struct ExperimentResult {
  EvalReport report;
  ExperimentConfig config;
  std::vector<std::string> artifacts;  // paths written, manifest last
};

// Runs one task end to end and writes report.csv, a model checkpoint,
// trace.csv, predictions.csv, and manifest.txt into config.out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

// One run per value of a single hyperparameter; results aggregate into
// sweep.csv at the sweep root. With per_value_seed each run offsets the seed
// by its index, otherwise all runs share the configured seed.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const std::string& param,
                                const std::vector<double>& values, bool per_value_seed = false);

struct SyntheticSpec {
  std::string class_a = "ibc";      // shifted class
  std::string class_b = "non_ibc";
  std::size_t per_class = 20;
  std::size_t genes = 512;
  double separation = 3.0;  // mean shift in units of log-space sigma
  std::uint64_t seed = 42;
};

// Two-class lognormal expression matrix; the shift applies to a random 10%
// of genes. Labels are attached on the returned matrix.
ExpressionMatrix make_synthetic(const SyntheticSpec& spec);

// Writes <dir>/expression.txt (series-matrix fixture format) and
// <dir>/labels.tsv; returns the two paths.
std::vector<std::string> write_synthetic_files(const ExpressionMatrix& m,
                                               const std::string& dir);

// Output root override: when the environment variable DEEPGEN_OUT_ROOT is set
// and `dir` is relative, the run lands under that root.
std::string resolve_out_dir(const std::string& dir);

}  // namespace deepgen
