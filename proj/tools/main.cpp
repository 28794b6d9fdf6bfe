// deepgen command-line harness: dataset ingestion, synthetic data, RBM and
// GAN experiment runs, sweeps, checkpoint scoring, and report evaluation.
//
// Exit codes: 0 success, 2 configuration or usage problem, 3 malformed input
// data, 4 numeric failure. The last stderr line on failure is always
//   deepgen-error code=<n> kind=<tag> detail="<message>"

#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deepgen/classifiers.hpp"
#include "deepgen/container.hpp"
#include "deepgen/dataio.hpp"
#include "deepgen/errors.hpp"
#include "deepgen/experiment.hpp"
#include "deepgen/gan.hpp"
#include "deepgen/metrics.hpp"
#include "deepgen/rbm.hpp"
#include "deepgen/textutil.hpp"

namespace fs = std::filesystem;
using namespace deepgen;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string escape_detail(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    if (ch == '"' || ch == '\\') {
      out += '\\';
      out += ch;
    } else if (ch == '\n') {
      out += "\\n";
    } else {
      out += ch;
    }
  }
  return out;
}

struct ErrorClass {
  int code;
  const char* kind;
};

ErrorClass classify_error(const std::exception& e) {
  if (dynamic_cast<const numeric_error*>(&e)) return {4, "numeric"};
  if (dynamic_cast<const parse_error*>(&e)) return {3, "parse"};
  if (dynamic_cast<const format_error*>(&e)) return {3, "format"};
  if (dynamic_cast<const label_error*>(&e)) return {3, "label"};
  if (dynamic_cast<const dimension_error*>(&e)) return {3, "dimension"};
  if (dynamic_cast<const config_error*>(&e)) return {2, "config"};
  if (dynamic_cast<const state_error*>(&e)) return {2, "state"};
  if (dynamic_cast<const split_error*>(&e)) return {2, "split"};
  if (dynamic_cast<const io_error*>(&e)) return {2, "io"};
  if (dynamic_cast<const error*>(&e)) return {2, "error"};
  return {1, "internal"};
}

int fail(const std::exception& e) {
  const ErrorClass ec = classify_error(e);
  std::cerr << "deepgen-error code=" << ec.code << " kind=" << ec.kind << " detail=\""
            << escape_detail(e.what()) << "\"\n";
  return ec.code;
}

ExpressionMatrix parse_data_file(const std::string& path, const std::string& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open data file: " + path);
  if (format == "series_matrix") return parse_series_matrix(in);
  if (format == "tsv_genes") return parse_tsv_matrix(in, TsvOrientation::genes_in_rows);
  if (format == "tsv_samples") return parse_tsv_matrix(in, TsvOrientation::samples_in_rows);
  throw config_error("format must be series_matrix, tsv_genes or tsv_samples, got " + format);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << content;
  if (!out) throw io_error("short write on " + path);
}

KvConfig assemble_config(const std::string& config_file,
                         const std::vector<std::string>& overrides) {
  KvConfig kv = config_file.empty() ? KvConfig() : KvConfig::from_file(config_file);
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw config_error("override must be KEY=VALUE, got '" + ov + "'");
    kv.set(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
  return kv;
}

// Shared flags for the experiment-running subcommands. Precedence: config
// file, then --set overrides, then the named flags.
struct RunArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::vector<std::string> overrides;

  std::vector<std::string> merged() const {
    std::vector<std::string> all = sets;
    all.insert(all.end(), overrides.begin(), overrides.end());
    return all;
  }
};

void add_run_flags(CLI::App* sub, RunArgs* args) {
  sub->add_option("--config", args->config_file, "key = value config file");
  sub->add_option("--set", args->sets, "KEY=VALUE config override (repeatable)");
  const auto kv_flag = [sub, args](const std::string& flag, const std::string& key,
                                   const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [args, key](const std::string& v) { args->overrides.push_back(key + "=" + v); },
        help);
  };
  kv_flag("--task", "task", "task id");
  kv_flag("--part", "part", "GAN sub-task: 1a, 1b, 2a or 2b");
  kv_flag("--pipeline", "pipeline", "rbm_logistic, rbm_svm or gan");
  kv_flag("--data", "data", "expression data file");
  kv_flag("--data2", "data2", "second data file, concatenated sample-wise");
  kv_flag("--format", "format", "series_matrix, tsv_genes or tsv_samples");
  kv_flag("--labels", "labels", "accession<TAB>class label map");
  kv_flag("--out", "out", "output directory (DEEPGEN_OUT_ROOT prefixes relative paths)");
  kv_flag("--seed", "seed", "RNG seed");
}

int print_experiment(const ExperimentResult& res) {
  std::cout << format_report(res.report);
  std::cout << "artifacts:\n";
  for (const auto& p : res.artifacts) std::cout << "  " << p << "\n";
  return 0;
}

int run_train(const RunArgs& args, bool want_gan) {
  const ExperimentConfig c = resolve_config(assemble_config(args.config_file, args.merged()));
  if (c.is_gan() != want_gan) {
    const std::string right = c.is_gan() ? "train-gan" : "train-rbm";
    throw config_error("task " + c.task + " belongs to " + right);
  }
  return print_experiment(run_experiment(c));
}

int run_sweep_cmd(const RunArgs& args, const std::string& param,
                  const std::vector<double>& values, bool per_value_seed) {
  const ExperimentConfig base =
      resolve_config(assemble_config(args.config_file, args.merged()));
  const std::vector<SweepRow> table = run_sweep(base, param, values, per_value_seed);
  std::cout << sweep_csv(table);
  std::cout << "wrote " << (fs::path(resolve_out_dir(base.out_dir)) / "sweep.csv").string()
            << "\n";
  return 0;
}

struct IngestArgs {
  std::string data, data2, format = "series_matrix", labels, out;
};

int run_ingest(const IngestArgs& args) {
  ExpressionMatrix m = parse_data_file(args.data, args.format);
  if (!args.data2.empty()) m = concat_samples(m, parse_data_file(args.data2, args.format));
  if (!args.labels.empty()) {
    std::ifstream lf(args.labels, std::ios::binary);
    if (!lf) throw io_error("cannot open label file: " + args.labels);
    m = attach_labels(m, load_label_map(lf));
  }
  validate(m);
  std::cout << "samples " << m.n_samples() << "\n";
  std::cout << "genes " << m.n_genes() << "\n";
  std::cout << "metadata " << m.metadata.size() << "\n";
  if (m.labeled())
    for (const auto& tag : label_order(m))
      std::cout << "class " << tag << " " << count_label(m, tag) << "\n";
  if (!args.out.empty()) {
    write_file(args.out, write_series_matrix(m));
    std::cout << "wrote " << args.out << "\n";
  }
  return 0;
}

struct SynthArgs {
  SyntheticSpec spec;
  std::string out;
};

int run_synth(const SynthArgs& args) {
  const ExpressionMatrix m = make_synthetic(args.spec);
  const auto paths = write_synthetic_files(m, resolve_out_dir(args.out));
  std::cout << "samples " << m.n_samples() << "\n";
  std::cout << "genes " << m.n_genes() << "\n";
  for (const auto& p : paths) std::cout << "wrote " << p << "\n";
  return 0;
}

struct ClassifyArgs {
  std::string model, rbm, data, format = "series_matrix", out;
  double threshold = 0.5;
};

int run_classify(const ClassifyArgs& args) {
  const ExpressionMatrix raw = parse_data_file(args.data, args.format);
  const ExpressionMatrix scaled = minmax_scale(raw);
  const Container mc = load_container(args.model);

  std::string csv = "sample,predicted,score\n";
  const auto append = [&csv, &raw](std::size_t i, int predicted, double score) {
    csv += raw.sample_ids[i] + "," + std::to_string(predicted) + "," + format_full(score) +
           "\n";
  };
  if (mc.kind == "gan") {
    GanModel model = gan_from_container(mc);
    const MembershipResult r = classify_by_membership(model, scaled, args.threshold);
    for (std::size_t i = 0; i < r.scores.size(); ++i) append(i, r.in_class[i], r.scores[i]);
  } else if (mc.kind == "logistic" || mc.kind == "svm") {
    if (args.rbm.empty())
      throw config_error("classifier head checkpoints need --rbm for the feature model");
    const RbmModel rbm = rbm_from_container(load_container(args.rbm));
    const Tensor features = transform(rbm, scaled.values);
    if (mc.kind == "logistic") {
      const LogisticPrediction p = logistic_predict(logistic_from_container(mc), features);
      for (std::size_t i = 0; i < p.labels.size(); ++i)
        append(i, p.labels[i], p.probabilities[i]);
    } else {
      const SvmPrediction p = svm_predict(svm_from_container(mc), features);
      for (std::size_t i = 0; i < p.labels.size(); ++i)
        append(i, p.labels[i] == 1 ? 1 : 0, p.decision_values[i]);
    }
  } else {
    throw config_error("cannot classify with a '" + mc.kind + "' checkpoint");
  }
  if (args.out.empty())
    std::cout << csv;
  else {
    write_file(args.out, csv);
    std::cout << "wrote " << args.out << "\n";
  }
  return 0;
}

struct EvaluateArgs {
  std::string predictions, positive, csv_out;
  double param = 0.0;
};

int run_evaluate(const EvaluateArgs& args) {
  std::ifstream in(args.predictions, std::ios::binary);
  if (!in) throw io_error("cannot open predictions file: " + args.predictions);
  std::string line;
  if (!next_line(in, &line) || line != "sample,truth,predicted,score")
    throw format_error("predictions file must start with sample,truth,predicted,score", 1);
  std::vector<int> truth, pred;
  std::map<std::string, std::size_t> other_tags;
  std::size_t line_no = 1;
  while (next_line(in, &line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 4) throw format_error("expected 4 comma-separated fields", line_no);
    truth.push_back(cells[1] == args.positive ? 1 : 0);
    pred.push_back(cells[2] == args.positive ? 1 : 0);
    if (cells[1] != args.positive) ++other_tags[cells[1]];
  }
  const std::string negative =
      other_tags.size() == 1 ? other_tags.begin()->first : std::string("rest");
  const EvalReport rep =
      report(confusion(truth, pred), Averaging::weighted, args.positive, negative);
  std::cout << format_report(rep);
  if (!args.csv_out.empty()) {
    std::vector<SweepRow> row(1);
    row[0].param = args.param;
    row[0].rep = rep;
    write_file(args.csv_out, sweep_csv(row));
    std::cout << "wrote " << args.csv_out << "\n";
  }
  return 0;
}

struct FetchArgs {
  std::string url, out;
};

int run_fetch(const FetchArgs& args);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generative models for gene-expression microarrays"};
  app.set_version_flag("--version", std::string("deepgen ") + kVersion);
  app.require_subcommand(1);

  IngestArgs ingest_args;
  CLI::App* ingest = app.add_subcommand("ingest", "parse a dataset and summarize it");
  ingest->add_option("--data", ingest_args.data, "expression data file")->required();
  ingest->add_option("--data2", ingest_args.data2, "second file, concatenated sample-wise");
  ingest->add_option("--format", ingest_args.format, "series_matrix, tsv_genes or tsv_samples")
      ->check(CLI::IsMember({"series_matrix", "tsv_genes", "tsv_samples"}));
  ingest->add_option("--labels", ingest_args.labels, "accession<TAB>class label map");
  ingest->add_option("--out", ingest_args.out, "rewrite as a series-matrix fixture");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a two-class synthetic dataset");
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_option("--class-a", synth_args.spec.class_a, "shifted class name");
  synth->add_option("--class-b", synth_args.spec.class_b, "baseline class name");
  synth->add_option("--per-class", synth_args.spec.per_class, "samples per class");
  synth->add_option("--genes", synth_args.spec.genes, "gene count");
  synth->add_option("--separation", synth_args.spec.separation,
                    "class mean shift in log-space sigmas");
  synth->add_option("--seed", synth_args.spec.seed, "RNG seed");

  RunArgs rbm_args;
  CLI::App* train_rbm =
      app.add_subcommand("train-rbm", "run an RBM + classifier-head experiment");
  add_run_flags(train_rbm, &rbm_args);

  RunArgs gan_args;
  CLI::App* train_gan = app.add_subcommand("train-gan", "run a GAN membership experiment");
  add_run_flags(train_gan, &gan_args);

  RunArgs sweep_args;
  std::string sweep_param;
  std::vector<double> sweep_values;
  bool per_value_seed = false;
  CLI::App* sweep = app.add_subcommand("sweep", "run one experiment per parameter value");
  add_run_flags(sweep, &sweep_args);
  sweep->add_option("--param", sweep_param, "hyperparameter to vary")->required();
  sweep->add_option("--values", sweep_values, "values to sweep")->required()->delimiter(',');
  sweep->add_flag("--per-value-seed", per_value_seed,
                  "offset the seed by the value index instead of sharing it");

  ClassifyArgs classify_args;
  CLI::App* classify = app.add_subcommand(
      "classify", "score samples with a checkpoint (inputs are min-max scaled per gene)");
  classify->add_option("--model", classify_args.model, "gan, logistic or svm checkpoint")
      ->required();
  classify->add_option("--rbm", classify_args.rbm, "RBM checkpoint for head features");
  classify->add_option("--data", classify_args.data, "expression data file")->required();
  classify->add_option("--format", classify_args.format,
                       "series_matrix, tsv_genes or tsv_samples")
      ->check(CLI::IsMember({"series_matrix", "tsv_genes", "tsv_samples"}));
  classify->add_option("--threshold", classify_args.threshold, "membership threshold");
  classify->add_option("--out", classify_args.out, "predictions file (default stdout)");

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "re-score a predictions file");
  evaluate->add_option("--predictions", eval_args.predictions, "predictions.csv from a run")
      ->required();
  evaluate->add_option("--positive", eval_args.positive, "positive class tag")->required();
  evaluate->add_option("--csv", eval_args.csv_out, "also write a one-row report CSV");
  evaluate->add_option("--param", eval_args.param, "param column value for --csv");

  FetchArgs fetch_args;
  CLI::App* fetch = app.add_subcommand("fetch", "download a dataset over plain http");
  fetch->add_option("--url", fetch_args.url, "http:// url of the file")->required();
  fetch->add_option("--out", fetch_args.out, "destination file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return 0;
    std::cerr << "deepgen-error code=2 kind=usage detail=\"" << escape_detail(e.what())
              << "\"\n";
    return 2;
  }

  try {
    if (ingest->parsed()) return run_ingest(ingest_args);
    if (synth->parsed()) return run_synth(synth_args);
    if (train_rbm->parsed()) return run_train(rbm_args, false);
    if (train_gan->parsed()) return run_train(gan_args, true);
    if (sweep->parsed()) return run_sweep_cmd(sweep_args, sweep_param, sweep_values,
                                              per_value_seed);
    if (classify->parsed()) return run_classify(classify_args);
    if (evaluate->parsed()) return run_evaluate(eval_args);
    if (fetch->parsed()) return run_fetch(fetch_args);
  } catch (const std::exception& e) {
    return fail(e);
  }
  return 0;
}

// The one networked path; everything above works offline. Kept out of the
// test surface on purpose.
#include "httplib.h"

namespace {

int run_fetch(const FetchArgs& args) {
  const std::string prefix = "http://";
  if (args.url.rfind(prefix, 0) != 0)
    throw config_error(
        "only plain http urls are supported here; download other schemes manually");
  const std::string rest = args.url.substr(prefix.size());
  const auto slash = rest.find('/');
  const std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : rest.substr(slash);
  if (host.empty()) throw config_error("url has no host: " + args.url);

  httplib::Client client(host);
  client.set_follow_location(true);
  const httplib::Result res = client.Get(path);
  if (!res) throw io_error("fetch failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw io_error("fetch failed: http status " + std::to_string(res->status));
  write_file(args.out, res->body);
  std::cout << "wrote " << res->body.size() << " bytes to " << args.out << "\n";
  return 0;
}

}  // namespace
