#include "deepgen/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <utility>

#include "deepgen/classifiers.hpp"
#include "deepgen/container.hpp"
#include "deepgen/errors.hpp"
#include "deepgen/gan.hpp"
#include "deepgen/rbm.hpp"
#include "deepgen/rng.hpp"
#include "deepgen/textutil.hpp"

namespace fs = std::filesystem;

namespace deepgen {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "task",   "part",       "pipeline", "data",    "data2",     "format",
      "labels", "out",        "arch",     "alpha",   "noc",       "logistic_c",
      "svm_c",  "gamma",      "alpha_d",  "alpha_g", "k",         "epochs",
      "split",  "minibatch",  "cd_steps", "threshold", "seed"};
  return keys;
}

const std::set<std::string>& task_names() {
  static const std::set<std::string> names = {"rbm_task1", "rbm_task2",  "rbm_prostate",
                                              "gan_task1", "gan_task2", "gan_task3"};
  return names;
}

void validate_experiment(const ExperimentConfig& c) {
  if (!task_names().count(c.task)) throw config_error("unknown task: " + c.task);
  if (c.is_gan()) {
    if (c.pipeline != "gan")
      throw config_error("task " + c.task + " requires pipeline gan, got " + c.pipeline);
    if (c.part != "1a" && c.part != "1b" && c.part != "2a" && c.part != "2b")
      throw config_error("part must be 1a, 1b, 2a or 2b, got '" + c.part + "'");
  } else {
    if (c.pipeline != "rbm_logistic" && c.pipeline != "rbm_svm")
      throw config_error("task " + c.task + " requires pipeline rbm_logistic or rbm_svm, got " +
                         c.pipeline);
    if (!c.part.empty()) throw config_error("part applies to GAN tasks only");
  }
  if (c.data_paths.empty()) throw config_error("no data path configured");
  if (c.data_format != "series_matrix" && c.data_format != "tsv_genes" &&
      c.data_format != "tsv_samples")
    throw config_error("format must be series_matrix, tsv_genes or tsv_samples, got " +
                       c.data_format);
  if (c.labels_path.empty()) throw config_error("labels path is required");
  if (c.out_dir.empty()) throw config_error("output directory is required");
  if (c.arch != "full" && c.arch != "reduced")
    throw config_error("arch must be full or reduced, got " + c.arch);
  if (!(c.alpha > 0.0)) throw config_error("alpha must be positive");
  if (c.noc == 0) throw config_error("noc must be positive");
  if (!(c.logistic_c > 0.0)) throw config_error("logistic_c must be positive");
  if (!(c.svm_c > 0.0)) throw config_error("svm_c must be positive");
  if (!(c.gamma > 0.0)) throw config_error("gamma must be positive");
  if (!(c.alpha_d > 0.0) || !(c.alpha_g > 0.0))
    throw config_error("alpha_d and alpha_g must be positive");
  if (c.k == 0) throw config_error("k must be positive");
  if (c.epochs == 0) throw config_error("epochs must be positive");
  if (!(c.split > 0.0 && c.split < 1.0)) throw config_error("split must lie in (0,1)");
  if (c.minibatch == 0) throw config_error("minibatch must be positive");
  if (c.cd_steps == 0) throw config_error("cd_steps must be positive");
  if (!(c.threshold >= 0.0 && c.threshold <= 1.0))
    throw config_error("threshold must lie in [0,1]");
}

ExpressionMatrix load_one(const std::string& path, const std::string& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open data file: " + path);
  if (format == "series_matrix") return parse_series_matrix(in);
  if (format == "tsv_genes") return parse_tsv_matrix(in, TsvOrientation::genes_in_rows);
  return parse_tsv_matrix(in, TsvOrientation::samples_in_rows);
}

ExpressionMatrix load_dataset(const ExperimentConfig& c) {
  ExpressionMatrix m = load_one(c.data_paths[0], c.data_format);
  for (std::size_t i = 1; i < c.data_paths.size(); ++i)
    m = concat_samples(m, load_one(c.data_paths[i], c.data_format));
  std::ifstream lf(c.labels_path, std::ios::binary);
  if (!lf) throw io_error("cannot open label file: " + c.labels_path);
  m = attach_labels(m, load_label_map(lf));
  validate(m);
  return m;
}

struct PreparedTask {
  ExpressionMatrix m;
  std::string positive, negative;
};

void require_only(const ExpressionMatrix& m, const std::set<std::string>& allowed) {
  for (const auto& tag : label_order(m))
    if (!allowed.count(tag)) throw label_error("unexpected class tag: " + tag);
}

void require_at_least(const ExpressionMatrix& m, const std::string& tag, std::size_t n) {
  if (count_label(m, tag) < n)
    throw label_error("class " + tag + " needs at least " + std::to_string(n) +
                      " samples, found " + std::to_string(count_label(m, tag)));
}

// Maps the task name onto concrete class pools. The two breast tumor tasks
// discard or merge the normal pool; the merged task first grows the normals
// eightfold so the class sizes match.
PreparedTask prepare_task(const ExpressionMatrix& m, const std::string& task) {
  if (task == "rbm_task1" || task == "gan_task2") {
    ExpressionMatrix t = count_label(m, "normal") > 0 ? drop_label(m, "normal") : m;
    require_only(t, {"ibc", "non_ibc"});
    require_at_least(t, "ibc", 2);
    require_at_least(t, "non_ibc", 2);
    return {std::move(t), "ibc", "non_ibc"};
  }
  if (task == "rbm_task2" || task == "gan_task1") {
    require_only(m, {"ibc", "non_ibc", "normal"});
    require_at_least(m, "normal", 1);
    require_at_least(m, "ibc", 1);
    require_at_least(m, "non_ibc", 1);
    ExpressionMatrix t = augment_replicate(m, "normal", 8);
    for (auto& tag : t.labels) tag = tag == "normal" ? "non_cancerous" : "cancerous";
    return {std::move(t), "cancerous", "non_cancerous"};
  }
  require_only(m, {"prostate_tumor", "prostate_normal"});
  require_at_least(m, "prostate_tumor", 2);
  require_at_least(m, "prostate_normal", 2);
  return {m, "prostate_tumor", "prostate_normal"};
}

struct PipelineOut {
  EvalReport report;
  std::string trace;  // csv text
  std::string predictions;  // csv text
  std::vector<std::pair<std::string, Container>> checkpoints;
};

std::string predictions_csv(const std::vector<std::string>& ids,
                            const std::vector<std::string>& truth,
                            const std::vector<std::string>& predicted,
                            const std::vector<double>& score) {
  std::string out = "sample,truth,predicted,score\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    out += ids[i] + "," + truth[i] + "," + predicted[i] + "," + format_full(score[i]) + "\n";
  return out;
}

PipelineOut run_rbm_pipeline(const PreparedTask& t, const ExperimentConfig& c) {
  SplitSpec spec{c.split, mix_seed(c.seed, 0), true};
  auto [train, test] = shuffle_split(t.m, spec);

  const MinMaxScaler scaler = MinMaxScaler::fit(train);
  const ExpressionMatrix train_s = scaler.apply(train, false);
  const ExpressionMatrix test_s = scaler.apply(test, true);

  RbmModel rbm = make_rbm(t.m.n_genes(), c.noc, mix_seed(c.seed, 1));
  CdConfig cd;
  cd.epsilon = c.alpha;
  cd.n_steps = c.cd_steps;
  cd.epochs = c.epochs;
  cd.minibatch = c.minibatch;
  cd.seed = mix_seed(c.seed, 2);
  const RbmTrainResult fit = train_rbm(rbm, train_s.values, cd);

  const Tensor f_train = transform(rbm, train_s.values);
  const Tensor f_test = transform(rbm, test_s.values);

  std::vector<int> y_train(train.n_samples());
  for (std::size_t i = 0; i < y_train.size(); ++i)
    y_train[i] = train.labels[i] == t.positive ? 1 : 0;
  std::vector<int> y_test(test.n_samples());
  for (std::size_t i = 0; i < y_test.size(); ++i)
    y_test[i] = test.labels[i] == t.positive ? 1 : 0;

  PipelineOut out;
  std::vector<int> predicted;
  std::vector<double> scores;
  if (c.pipeline == "rbm_logistic") {
    const LogisticModel head =
        logistic_fit(f_train, y_train, c.logistic_c, 0.1, 500, mix_seed(c.seed, 3));
    const LogisticPrediction pred = logistic_predict(head, f_test);
    predicted = pred.labels;
    scores = pred.probabilities;
    out.checkpoints.emplace_back("logistic.container", to_container(head));
  } else {
    std::vector<int> y_pm(y_train.size());
    for (std::size_t i = 0; i < y_pm.size(); ++i) y_pm[i] = y_train[i] == 1 ? 1 : -1;
    const SvmModel head =
        svm_fit(f_train, y_pm, c.svm_c, c.gamma, 1e-3, 50, mix_seed(c.seed, 3));
    const SvmPrediction pred = svm_predict(head, f_test);
    predicted.resize(pred.labels.size());
    for (std::size_t i = 0; i < predicted.size(); ++i)
      predicted[i] = pred.labels[i] == 1 ? 1 : 0;
    scores = pred.decision_values;
    out.checkpoints.emplace_back("svm.container", to_container(head));
  }
  out.checkpoints.emplace_back("rbm.container", to_container(rbm));

  out.report = report(confusion(y_test, predicted), Averaging::weighted, t.positive, t.negative);

  std::string trace = "epoch,recon_error\n";
  for (std::size_t e = 0; e < fit.epoch_recon_error.size(); ++e)
    trace += std::to_string(e + 1) + "," + format_full(fit.epoch_recon_error[e]) + "\n";
  out.trace = std::move(trace);

  std::vector<std::string> truth_names(y_test.size()), pred_names(y_test.size());
  for (std::size_t i = 0; i < y_test.size(); ++i) {
    truth_names[i] = y_test[i] == 1 ? t.positive : t.negative;
    pred_names[i] = predicted[i] == 1 ? t.positive : t.negative;
  }
  out.predictions = predictions_csv(test.sample_ids, truth_names, pred_names, scores);
  return out;
}

// Membership evaluation. The model trains on a split of the Tr class; the
// held-out Tr rows are the ground-truth members of the scored pool, and the
// `b` parts add the entire opposite class as ground-truth non-members.
PipelineOut run_gan_pipeline(const PreparedTask& t, const ExperimentConfig& c) {
  const std::string tr_tag = c.part[0] == '1' ? t.positive : t.negative;
  const std::string other_tag = tr_tag == t.positive ? t.negative : t.positive;
  const bool cross_class = c.part[1] == 'b';

  SplitSpec spec{c.split, mix_seed(c.seed, 0), true};
  auto [gan_train, held_out] = shuffle_split(select_labels(t.m, {tr_tag}), spec);

  ExpressionMatrix eval_pool =
      cross_class ? concat_samples(held_out, select_labels(t.m, {other_tag})) : held_out;

  const MinMaxScaler scaler = MinMaxScaler::fit(gan_train);
  const ExpressionMatrix train_s = scaler.apply(gan_train, false);
  const ExpressionMatrix eval_s = scaler.apply(eval_pool, true);

  const ArchSpec arch =
      c.arch == "reduced"
          ? reduced_architecture_for(t.m.n_genes())
          : build_architecture(t.m.n_genes(),
                               c.task == "gan_task3" ? Dataset::prostate : Dataset::breast);
  GanModel model = build_gan(arch, mix_seed(c.seed, 10));

  GanTrainConfig g;
  g.alpha_d = c.alpha_d;
  g.alpha_g = c.alpha_g;
  g.k = c.k;
  g.minibatch = c.minibatch;
  g.epochs = c.epochs;
  g.seed = mix_seed(c.seed, 11);
  const GanTrace trace = train_gan(model, train_s, g);

  const MembershipResult membership = classify_by_membership(model, eval_s, c.threshold);

  std::vector<int> truth(eval_pool.n_samples());
  for (std::size_t i = 0; i < truth.size(); ++i)
    truth[i] = eval_pool.labels[i] == tr_tag ? 1 : 0;

  PipelineOut out;
  const std::string negative_name = cross_class ? other_tag : "out_of_class";
  out.report = report(confusion(truth, membership.in_class), Averaging::weighted, tr_tag,
                      negative_name);
  out.trace = trace_csv(trace);
  out.checkpoints.emplace_back("gan.container", to_container(model));

  std::vector<std::string> truth_names(truth.size()), pred_names(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth_names[i] = truth[i] == 1 ? tr_tag : negative_name;
    pred_names[i] = membership.in_class[i] == 1 ? tr_tag : negative_name;
  }
  out.predictions =
      predictions_csv(eval_pool.sample_ids, truth_names, pred_names, membership.scores);
  return out;
}

std::string manifest_text(const ExperimentConfig& c) {
  std::string s = "deepgen-manifest 1\n";
  s += "container-format deepgen-container 1\n";
  s += "report-columns param,precision,recall,f1\n";
  s += std::string("trace-columns ") +
       (c.is_gan() ? "step,phase,loss,mean_real_score,mean_fake_score" : "epoch,recon_error") +
       "\n";
  s += to_kv(c).echo();
  return s;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << content;
  if (!out) throw io_error("short write on " + path.string());
}

void set_param(ExperimentConfig& c, const std::string& param, double value) {
  const auto as_count = [&](const char* name) {
    if (!(value >= 1.0) || value != std::floor(value))
      throw config_error(std::string(name) + " sweep values must be positive integers");
    return static_cast<std::size_t>(value);
  };
  if (param == "alpha")
    c.alpha = value;
  else if (param == "noc")
    c.noc = as_count("noc");
  else if (param == "logistic_c")
    c.logistic_c = value;
  else if (param == "svm_c")
    c.svm_c = value;
  else if (param == "gamma")
    c.gamma = value;
  else if (param == "alpha_d")
    c.alpha_d = value;
  else if (param == "alpha_g")
    c.alpha_g = value;
  else if (param == "k")
    c.k = as_count("k");
  else if (param == "epochs")
    c.epochs = as_count("epochs");
  else if (param == "split")
    c.split = value;
  else if (param == "minibatch")
    c.minibatch = as_count("minibatch");
  else if (param == "cd_steps")
    c.cd_steps = as_count("cd_steps");
  else if (param == "threshold")
    c.threshold = value;
  else
    throw config_error("unknown sweep parameter: " + param);
}

}  // namespace

KvConfig KvConfig::from_stream(std::istream& in) {
  KvConfig kv;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, &line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw config_error("config line " + std::to_string(line_no) + ": empty key");
    kv.set(key, trim(t.substr(eq + 1)));
  }
  return kv;
}

void KvConfig::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw config_error("empty config key");
  values_[key] = value;
}

KvConfig KvConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open config: " + path);
  return from_stream(in);
}

bool KvConfig::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& KvConfig::require(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw config_error("missing config key: " + key);
  return it->second;
}

std::string KvConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double out = 0.0;
  if (!parse_double_strict(it->second, &out))
    throw config_error("config key " + key + ": not a number: '" + it->second + "'");
  return out;
}

std::size_t KvConfig::get_size(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& s = it->second;
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw config_error("config key " + key + ": not a non-negative integer: '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw config_error("config key " + key + ": out of range: '" + s + "'");
  }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw config_error("config key " + key + ": expected true or false, got '" + it->second + "'");
}

std::string KvConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

ExperimentConfig resolve_config(const KvConfig& kv) {
  for (const auto& [key, value] : kv.values()) {
    (void)value;
    if (!known_keys().count(key)) throw config_error("unknown config key: " + key);
  }
  ExperimentConfig c;
  c.task = kv.require("task");
  if (!task_names().count(c.task)) throw config_error("unknown task: " + c.task);
  c.pipeline = kv.get("pipeline", c.is_gan() ? "gan" : "rbm_logistic");
  c.part = kv.get("part", c.is_gan() ? "1a" : "");
  c.data_paths = {kv.require("data")};
  if (kv.has("data2")) c.data_paths.push_back(kv.require("data2"));
  c.data_format = kv.get("format", "series_matrix");
  c.labels_path = kv.require("labels");
  c.out_dir = kv.require("out");
  c.arch = kv.get("arch", "full");
  c.alpha = kv.get_double("alpha", c.alpha);
  c.noc = kv.get_size("noc", c.noc);
  c.logistic_c = kv.get_double("logistic_c", c.logistic_c);
  c.svm_c = kv.get_double("svm_c", c.svm_c);
  c.gamma = kv.get_double("gamma", c.gamma);
  c.alpha_d = kv.get_double("alpha_d", c.alpha_d);
  c.alpha_g = kv.get_double("alpha_g", c.alpha_g);
  c.k = kv.get_size("k", c.k);
  c.epochs = kv.get_size("epochs", c.is_gan() ? 8 : 50);
  c.split = kv.get_double("split", c.split);
  c.minibatch = kv.get_size("minibatch", c.minibatch);
  c.cd_steps = kv.get_size("cd_steps", c.cd_steps);
  c.threshold = kv.get_double("threshold", c.threshold);
  c.seed = kv.get_u64("seed", c.seed);
  validate_experiment(c);
  return c;
}

KvConfig to_kv(const ExperimentConfig& config) {
  KvConfig kv;
  kv.set("task", config.task);
  if (config.is_gan()) kv.set("part", config.part);
  kv.set("pipeline", config.pipeline);
  kv.set("data", config.data_paths.empty() ? "" : config.data_paths[0]);
  if (config.data_paths.size() > 1) kv.set("data2", config.data_paths[1]);
  kv.set("format", config.data_format);
  kv.set("labels", config.labels_path);
  kv.set("out", config.out_dir);
  if (config.is_gan()) {
    kv.set("arch", config.arch);
    kv.set("alpha_d", format_full(config.alpha_d));
    kv.set("alpha_g", format_full(config.alpha_g));
    kv.set("k", std::to_string(config.k));
    kv.set("threshold", format_full(config.threshold));
  } else {
    kv.set("alpha", format_full(config.alpha));
    kv.set("noc", std::to_string(config.noc));
    kv.set("cd_steps", std::to_string(config.cd_steps));
    if (config.pipeline == "rbm_svm") {
      kv.set("svm_c", format_full(config.svm_c));
      kv.set("gamma", format_full(config.gamma));
    } else {
      kv.set("logistic_c", format_full(config.logistic_c));
    }
  }
  kv.set("epochs", std::to_string(config.epochs));
  kv.set("split", format_full(config.split));
  kv.set("minibatch", std::to_string(config.minibatch));
  kv.set("seed", std::to_string(config.seed));
  return kv;
}

std::string resolve_out_dir(const std::string& dir) {
  if (dir.empty()) throw config_error("output directory is empty");
  const char* root = std::getenv("DEEPGEN_OUT_ROOT");
  const fs::path p(dir);
  if (root != nullptr && *root != '\0' && p.is_relative())
    return (fs::path(root) / p).string();
  return dir;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  if (c.epochs == 0) c.epochs = c.is_gan() ? 8 : 50;
  validate_experiment(c);

  const fs::path out = resolve_out_dir(c.out_dir);
  fs::create_directories(out);
  try {
    const ExpressionMatrix raw = load_dataset(c);
    const PreparedTask task = prepare_task(raw, c.task);
    PipelineOut po = c.is_gan() ? run_gan_pipeline(task, c) : run_rbm_pipeline(task, c);

    ExperimentResult result;
    result.report = po.report;
    result.config = c;

    std::vector<SweepRow> row(1);
    row[0].param = c.is_gan() ? c.alpha_d : c.alpha;
    row[0].rep = po.report;
    const auto emit = [&](const std::string& name, const std::string& content) {
      const fs::path p = out / name;
      write_text(p, content);
      result.artifacts.push_back(p.string());
    };
    emit("report.csv", sweep_csv(row));
    emit("trace.csv", po.trace);
    emit("predictions.csv", po.predictions);
    for (const auto& [name, container] : po.checkpoints) {
      const fs::path p = out / name;
      save_container(p.string(), container);
      result.artifacts.push_back(p.string());
    }
    emit("manifest.txt", manifest_text(c));
    return result;
  } catch (const std::exception& e) {
    // Leave a marker so a half-written output directory is recognizable.
    std::ofstream marker(out / "failed.txt", std::ios::binary);
    marker << "task " << c.task << (c.part.empty() ? "" : " part " + c.part)
           << " failed: " << e.what() << "\n";
    throw;
  }
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const std::string& param,
                                const std::vector<double>& values, bool per_value_seed) {
  if (values.empty()) throw config_error("sweep needs at least one value");
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    ExperimentConfig c = base;
    if (c.epochs == 0) c.epochs = c.is_gan() ? 8 : 50;
    set_param(c, param, values[i]);
    if (per_value_seed) c.seed = base.seed + i;
    c.out_dir = (fs::path(base.out_dir) / (param + "=" + format_full(values[i]))).string();
    const ExperimentResult res = run_experiment(c);
    rows.push_back({values[i], res.report});
  }
  std::vector<SweepRow> table = sweep_table(std::move(rows));
  const fs::path root = resolve_out_dir(base.out_dir);
  fs::create_directories(root);
  write_text(root / "sweep.csv", sweep_csv(table));
  return table;
}

ExpressionMatrix make_synthetic(const SyntheticSpec& spec) {
  if (spec.per_class == 0) throw config_error("per_class must be positive");
  if (spec.genes == 0) throw config_error("genes must be positive");
  if (spec.separation < 0.0) throw config_error("separation must be non-negative");
  if (spec.class_a.empty() || spec.class_b.empty() || spec.class_a == spec.class_b)
    throw config_error("class names must be distinct and non-empty");

  Rng rng(spec.seed);
  const std::size_t n_inf = std::max<std::size_t>(1, spec.genes / 10);
  std::vector<std::size_t> order(spec.genes);
  for (std::size_t g = 0; g < spec.genes; ++g) order[g] = g;
  rng.shuffle(order);
  std::vector<char> informative(spec.genes, 0);
  for (std::size_t i = 0; i < n_inf; ++i) informative[order[i]] = 1;

  constexpr double kLogSigma = 1.0;
  std::vector<double> mu(spec.genes);
  for (auto& v : mu) v = rng.normal();

  const std::size_t n = 2 * spec.per_class;
  ExpressionMatrix m;
  m.values = Tensor({n, spec.genes});
  m.sample_ids.resize(n);
  m.gene_ids.resize(spec.genes);
  m.labels.resize(n);
  for (std::size_t g = 0; g < spec.genes; ++g) m.gene_ids[g] = "g" + std::to_string(g + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const bool first = i < spec.per_class;
    const std::size_t k = first ? i + 1 : i + 1 - spec.per_class;
    m.sample_ids[i] = (first ? "SYNA" : "SYNB") + std::to_string(k);
    m.labels[i] = first ? spec.class_a : spec.class_b;
    for (std::size_t g = 0; g < spec.genes; ++g) {
      const double shift = (first && informative[g]) ? spec.separation * kLogSigma : 0.0;
      m.values.at(i, g) = std::exp(mu[g] + shift + kLogSigma * rng.normal());
    }
  }
  m.metadata.emplace_back("Series_title", "synthetic two-class lognormal expression");
  validate(m);
  return m;
}

std::vector<std::string> write_synthetic_files(const ExpressionMatrix& m,
                                               const std::string& dir) {
  fs::create_directories(dir);
  const fs::path expr = fs::path(dir) / "expression.txt";
  const fs::path labels = fs::path(dir) / "labels.tsv";
  write_text(expr, write_series_matrix(m));
  std::string tsv = "# sample\tclass\n";
  for (std::size_t i = 0; i < m.n_samples(); ++i)
    tsv += m.sample_ids[i] + "\t" + m.labels[i] + "\n";
  write_text(labels, tsv);
  return {expr.string(), labels.string()};
}

}  // namespace deepgen
