// Python bindings for the main operations: parsing, synthetic data, RBM and
// GAN training, classifier heads, metrics, and the experiment harness.
// Matrices cross the boundary as plain nested lists to keep the module free
// of runtime dependencies.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "deepgen/classifiers.hpp"
#include "deepgen/container.hpp"
#include "deepgen/dataio.hpp"
#include "deepgen/errors.hpp"
#include "deepgen/experiment.hpp"
#include "deepgen/gan.hpp"
#include "deepgen/metrics.hpp"
#include "deepgen/rbm.hpp"
#include "deepgen/rng.hpp"
#include "deepgen/tensor.hpp"

namespace py = pybind11;
using namespace deepgen;

namespace {

using Rows = std::vector<std::vector<double>>;

Tensor tensor2d(const Rows& rows) {
  if (rows.empty() || rows[0].empty())
    throw dimension_error("need a non-empty 2-d value list");
  const std::size_t cols = rows[0].size();
  Tensor t({rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw dimension_error("ragged rows in value list");
    for (std::size_t j = 0; j < cols; ++j) t.at(i, j) = rows[i][j];
  }
  return t;
}

Rows lists2d(const Tensor& t) {
  if (t.rank() != 2) throw dimension_error("expected a rank-2 tensor, got " + t.shape_str());
  Rows rows(t.dim(0), std::vector<double>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) rows[i][j] = t.at(i, j);
  return rows;
}

py::dict report_dict(const EvalReport& rep) {
  const auto cls = [](const ClassMetrics& c) {
    py::dict d;
    d["name"] = c.name;
    d["tp"] = c.tp;
    d["fp"] = c.fp;
    d["fn"] = c.fn;
    d["tn"] = c.tn;
    d["support"] = c.support;
    d["precision"] = c.precision;
    d["recall"] = c.recall;
    d["f1"] = c.f1;
    return d;
  };
  py::dict d;
  d["averaging"] = averaging_name(rep.averaging);
  d["precision"] = rep.precision;
  d["recall"] = rep.recall;
  d["f1"] = rep.f1;
  d["n_detected"] = rep.n_detected;
  d["n_total"] = rep.n_total;
  d["positive"] = cls(rep.positive);
  d["negative"] = cls(rep.negative);
  return d;
}

ExperimentConfig config_from_dict(const std::map<std::string, std::string>& cfg) {
  KvConfig kv;
  for (const auto& [key, value] : cfg) kv.set(key, value);
  return resolve_config(kv);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "generative models for gene-expression microarrays";
  m.attr("__version__") = "0.1.0";

  auto base = py::register_exception<error>(m, "DeepgenError");
  py::register_exception<dimension_error>(m, "DimensionError", base);
  py::register_exception<config_error>(m, "ConfigError", base);
  py::register_exception<state_error>(m, "StateError", base);
  py::register_exception<numeric_error>(m, "NumericError", base);
  py::register_exception<io_error>(m, "IoError", base);
  py::register_exception<label_error>(m, "LabelError", base);
  py::register_exception<split_error>(m, "SplitError", base);
  py::register_exception<format_error>(m, "FormatError", base);
  py::register_exception<parse_error>(m, "ParseError", base);

  py::class_<ExpressionMatrix>(m, "ExpressionMatrix")
      .def(py::init<>())
      .def_readwrite("sample_ids", &ExpressionMatrix::sample_ids)
      .def_readwrite("gene_ids", &ExpressionMatrix::gene_ids)
      .def_readwrite("labels", &ExpressionMatrix::labels)
      .def_property(
          "values", [](const ExpressionMatrix& m_) { return lists2d(m_.values); },
          [](ExpressionMatrix& m_, const Rows& rows) { m_.values = tensor2d(rows); })
      .def_property_readonly("n_samples", &ExpressionMatrix::n_samples)
      .def_property_readonly("n_genes", &ExpressionMatrix::n_genes)
      .def("__repr__", [](const ExpressionMatrix& m_) {
        return "<ExpressionMatrix " + std::to_string(m_.n_samples()) + "x" +
               std::to_string(m_.n_genes()) + (m_.labeled() ? " labeled>" : ">");
      });

  m.def("parse_series_matrix",
        py::overload_cast<const std::string&>(&parse_series_matrix), py::arg("text"));
  m.def("write_series_matrix", &write_series_matrix, py::arg("matrix"));
  m.def(
      "parse_tsv_matrix",
      [](const std::string& text, const std::string& orientation) {
        if (orientation == "genes_in_rows")
          return parse_tsv_matrix(text, TsvOrientation::genes_in_rows);
        if (orientation == "samples_in_rows")
          return parse_tsv_matrix(text, TsvOrientation::samples_in_rows);
        throw config_error("orientation must be genes_in_rows or samples_in_rows");
      },
      py::arg("text"), py::arg("orientation"));
  m.def("load_label_map", py::overload_cast<const std::string&>(&load_label_map),
        py::arg("text"));
  m.def("attach_labels", &attach_labels, py::arg("matrix"), py::arg("label_map"));
  m.def("minmax_scale", &minmax_scale, py::arg("matrix"));
  m.def("augment_replicate", &augment_replicate, py::arg("matrix"), py::arg("class_tag"),
        py::arg("times"), py::arg("jitter_sigma") = 0.0, py::arg("seed") = 0);
  m.def(
      "shuffle_split",
      [](const ExpressionMatrix& m_, double test_fraction, std::uint64_t seed,
         bool stratified) {
        return shuffle_split(m_, SplitSpec{test_fraction, seed, stratified});
      },
      py::arg("matrix"), py::arg("test_fraction") = 0.5, py::arg("seed") = 0,
      py::arg("stratified") = true);
  m.def(
      "make_synthetic",
      [](const std::string& class_a, const std::string& class_b, std::size_t per_class,
         std::size_t genes, double separation, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.class_a = class_a;
        spec.class_b = class_b;
        spec.per_class = per_class;
        spec.genes = genes;
        spec.separation = separation;
        spec.seed = seed;
        return make_synthetic(spec);
      },
      py::arg("class_a") = "ibc", py::arg("class_b") = "non_ibc", py::arg("per_class") = 20,
      py::arg("genes") = 512, py::arg("separation") = 3.0, py::arg("seed") = 42);
  m.def("write_synthetic_files", &write_synthetic_files, py::arg("matrix"), py::arg("dir"));

  py::class_<RbmModel>(m, "RbmModel")
      .def_property_readonly("n_visible", &RbmModel::n_visible)
      .def_property_readonly("n_hidden", &RbmModel::n_hidden)
      .def(
          "transform",
          [](const RbmModel& r, const Rows& rows) { return lists2d(transform(r, tensor2d(rows))); },
          py::arg("values"))
      .def(
          "free_energy",
          [](const RbmModel& r, const std::vector<double>& v) {
            return free_energy(r, std::span<const double>(v));
          },
          py::arg("v"))
      .def("save",
           [](const RbmModel& r, const std::string& path) { save_container(path, to_container(r)); })
      .def_static("load",
                  [](const std::string& path) { return rbm_from_container(load_container(path)); });

  m.def(
      "train_rbm",
      [](const Rows& values, std::size_t n_hidden, double epsilon, std::size_t cd_steps,
         std::size_t epochs, std::size_t minibatch, std::uint64_t seed) {
        const Tensor data = tensor2d(values);
        RbmModel model = make_rbm(data.dim(1), n_hidden, mix_seed(seed, 1));
        CdConfig cd;
        cd.epsilon = epsilon;
        cd.n_steps = cd_steps;
        cd.epochs = epochs;
        cd.minibatch = minibatch;
        cd.seed = mix_seed(seed, 2);
        const RbmTrainResult fit = train_rbm(model, data, cd);
        return py::make_tuple(std::move(model), fit.epoch_recon_error);
      },
      py::arg("values"), py::arg("n_hidden"), py::arg("epsilon") = 0.001,
      py::arg("cd_steps") = 1, py::arg("epochs") = 50, py::arg("minibatch") = 10,
      py::arg("seed") = 42);

  py::class_<LogisticModel>(m, "LogisticModel")
      .def(
          "predict",
          [](const LogisticModel& h, const Rows& features) {
            const LogisticPrediction p = logistic_predict(h, tensor2d(features));
            return py::make_tuple(p.probabilities, p.labels);
          },
          py::arg("features"))
      .def("save",
           [](const LogisticModel& h, const std::string& path) {
             save_container(path, to_container(h));
           })
      .def_static("load", [](const std::string& path) {
        return logistic_from_container(load_container(path));
      });

  m.def(
      "logistic_fit",
      [](const Rows& features, const std::vector<int>& labels, double C, double step_size,
         std::size_t epochs, std::uint64_t seed) {
        return logistic_fit(tensor2d(features), labels, C, step_size, epochs, seed);
      },
      py::arg("features"), py::arg("labels"), py::arg("C") = 1.8, py::arg("step_size") = 0.1,
      py::arg("epochs") = 500, py::arg("seed") = 0);

  py::class_<SvmModel>(m, "SvmModel")
      .def_readonly("converged", &SvmModel::converged)
      .def(
          "predict",
          [](const SvmModel& h, const Rows& features) {
            const SvmPrediction p = svm_predict(h, tensor2d(features));
            return py::make_tuple(p.decision_values, p.labels);
          },
          py::arg("features"))
      .def("save",
           [](const SvmModel& h, const std::string& path) {
             save_container(path, to_container(h));
           })
      .def_static("load",
                  [](const std::string& path) { return svm_from_container(load_container(path)); });

  m.def(
      "svm_fit",
      [](const Rows& features, const std::vector<int>& labels, double svm_C, double gamma,
         double tol, std::size_t max_passes, std::uint64_t seed) {
        return svm_fit(tensor2d(features), labels, svm_C, gamma, tol, max_passes, seed);
      },
      py::arg("features"), py::arg("labels"), py::arg("svm_C") = 1.0, py::arg("gamma") = 0.06,
      py::arg("tol") = 1e-3, py::arg("max_passes") = 50, py::arg("seed") = 0);

  py::class_<GanModel>(m, "GanModel")
      .def_property_readonly("trained", [](const GanModel& g) { return g.trained; })
      .def_property_readonly("gene_count", [](const GanModel& g) { return g.arch.gene_count; })
      .def(
          "membership",
          [](GanModel& g, const ExpressionMatrix& samples, double threshold) {
            const MembershipResult r = classify_by_membership(g, samples, threshold);
            return py::make_tuple(r.scores, r.in_class);
          },
          py::arg("samples"), py::arg("threshold") = 0.5)
      .def(
          "generate",
          [](GanModel& g, std::size_t n, std::uint64_t seed) {
            Rng rng(seed);
            const Tensor noise = sample_noise(n, g.arch.noise_dim, rng);
            const Tensor maps = generate(g, noise);
            return lists2d(maps.reshaped({n, g.arch.gene_count}));
          },
          py::arg("n"), py::arg("seed") = 0)
      .def("save",
           [](const GanModel& g, const std::string& path) { save_container(path, to_container(g)); })
      .def_static("load",
                  [](const std::string& path) { return gan_from_container(load_container(path)); });

  m.def(
      "train_gan",
      [](const ExpressionMatrix& data, const std::string& arch, double alpha_d, double alpha_g,
         std::size_t k, std::size_t minibatch, std::size_t epochs, std::uint64_t seed) {
        ArchSpec spec;
        if (arch == "reduced")
          spec = reduced_architecture_for(data.n_genes());
        else if (arch == "breast")
          spec = build_architecture(data.n_genes(), Dataset::breast);
        else if (arch == "prostate")
          spec = build_architecture(data.n_genes(), Dataset::prostate);
        else
          throw config_error("arch must be reduced, breast or prostate, got " + arch);
        GanModel model = build_gan(spec, mix_seed(seed, 10));
        GanTrainConfig cfg;
        cfg.alpha_d = alpha_d;
        cfg.alpha_g = alpha_g;
        cfg.k = k;
        cfg.minibatch = minibatch;
        cfg.epochs = epochs;
        cfg.seed = mix_seed(seed, 11);
        const GanTrace trace = train_gan(model, data, cfg);
        return py::make_tuple(std::move(model), trace_csv(trace));
      },
      py::arg("data"), py::arg("arch") = "reduced", py::arg("alpha_d") = 3e-5,
      py::arg("alpha_g") = 3e-5, py::arg("k") = 1, py::arg("minibatch") = 10,
      py::arg("epochs") = 8, py::arg("seed") = 42);

  m.def(
      "evaluate_labels",
      [](const std::vector<int>& truth, const std::vector<int>& pred,
         const std::string& positive, const std::string& negative,
         const std::string& averaging) {
        Averaging mode;
        if (averaging == "weighted")
          mode = Averaging::weighted;
        else if (averaging == "macro")
          mode = Averaging::macro;
        else
          throw config_error("averaging must be weighted or macro, got " + averaging);
        return report_dict(report(confusion(truth, pred), mode, positive, negative));
      },
      py::arg("truth"), py::arg("pred"), py::arg("positive") = "positive",
      py::arg("negative") = "negative", py::arg("averaging") = "weighted");
  m.def("f1_round_consistent", &f1_round_consistent, py::arg("precision_pct"),
        py::arg("recall_pct"), py::arg("f1_pct"));

  m.def(
      "run_experiment",
      [](const std::map<std::string, std::string>& cfg) {
        const ExperimentResult res = run_experiment(config_from_dict(cfg));
        py::dict d = report_dict(res.report);
        d["artifacts"] = res.artifacts;
        d["text"] = format_report(res.report);
        return d;
      },
      py::arg("config"));
  m.def(
      "run_sweep",
      [](const std::map<std::string, std::string>& cfg, const std::string& param,
         const std::vector<double>& values, bool per_value_seed) {
        const auto rows = run_sweep(config_from_dict(cfg), param, values, per_value_seed);
        py::list out;
        for (const auto& row : rows) {
          py::dict d = report_dict(row.rep);
          d["param"] = row.param;
          out.append(std::move(d));
        }
        return out;
      },
      py::arg("config"), py::arg("param"), py::arg("values"),
      py::arg("per_value_seed") = false);
}
