#include "deepgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "deepgen/errors.hpp"
#include "deepgen/textutil.hpp"

namespace deepgen {
namespace {

double safe_ratio(std::size_t num, std::size_t den, bool* defined_zero) {
  if (den == 0) {
    if (defined_zero) *defined_zero = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic_f1(double p, double r) {
  const double s = p + r;
  return s > 0.0 ? 2.0 * p * r / s : 0.0;
}

ClassMetrics class_metrics(const std::string& name, std::size_t tp, std::size_t fp,
                           std::size_t fn, std::size_t tn) {
  ClassMetrics m;
  m.name = name;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.support = tp + fn;
  m.precision = safe_ratio(tp, tp + fp, &m.precision_defined_zero);
  m.recall = safe_ratio(tp, tp + fn, &m.recall_defined_zero);
  m.f1 = harmonic_f1(m.precision, m.recall);
  return m;
}

}  // namespace

ConfusionCounts confusion(const std::vector<int>& truth, const std::vector<int>& pred) {
  if (truth.size() != pred.size())
    throw dimension_error("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                          std::to_string(pred.size()) + " predictions");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1))
      throw label_error("confusion expects binary labels, sample " + std::to_string(i) +
                        " has (" + std::to_string(t) + ", " + std::to_string(p) + ")");
    if (t == 1)
      p == 1 ? ++c.tp : ++c.fn;
    else
      p == 1 ? ++c.fp : ++c.tn;
  }
  return c;
}

std::string averaging_name(Averaging mode) {
  return mode == Averaging::macro ? "macro" : "weighted";
}

EvalReport report(const ConfusionCounts& counts, Averaging mode,
                  const std::string& positive_name, const std::string& negative_name) {
  EvalReport rep;
  rep.averaging = mode;
  rep.positive = class_metrics(positive_name, counts.tp, counts.fp, counts.fn, counts.tn);
  // The negative class: its hits are the positive class's true negatives.
  rep.negative = class_metrics(negative_name, counts.tn, counts.fn, counts.fp, counts.tp);
  rep.n_detected = counts.tp + counts.fp;
  rep.n_total = counts.total();

  const double wp = static_cast<double>(rep.positive.support);
  const double wn = static_cast<double>(rep.negative.support);
  double a = 1.0, b = 1.0;
  if (mode == Averaging::weighted) {
    a = wp;
    b = wn;
  }
  const double denom = a + b;
  if (denom > 0.0) {
    rep.precision = (a * rep.positive.precision + b * rep.negative.precision) / denom;
    rep.recall = (a * rep.positive.recall + b * rep.negative.recall) / denom;
    rep.f1 = (a * rep.positive.f1 + b * rep.negative.f1) / denom;
  }
  return rep;
}

int display_percent(double fraction) {
  return static_cast<int>(std::llround(fraction * 100.0));
}

bool f1_round_consistent(int precision_pct, int recall_pct, int f1_pct) {
  auto in_range = [](int v) { return v >= 0 && v <= 100; };
  if (!in_range(precision_pct) || !in_range(recall_pct) || !in_range(f1_pct)) return false;
  // F1 is monotone in both arguments, so the reachable interval under the
  // half-unit rounding windows is spanned by the two corner evaluations.
  const double p_lo = std::max(0.0, precision_pct - 0.5);
  const double p_hi = std::min(100.0, precision_pct + 0.5);
  const double r_lo = std::max(0.0, recall_pct - 0.5);
  const double r_hi = std::min(100.0, recall_pct + 0.5);
  const double f_lo = harmonic_f1(p_lo, r_lo);
  const double f_hi = harmonic_f1(p_hi, r_hi);
  return f_lo < f1_pct + 0.5 && f_hi >= f1_pct - 0.5;
}

std::vector<SweepRow> sweep_table(std::vector<SweepRow> runs) {
  if (runs.empty()) throw config_error("sweep_table needs at least one run");
  std::stable_sort(runs.begin(), runs.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.param < b.param; });
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].param == runs[i - 1].param)
      throw config_error("duplicate sweep value " + format_full(runs[i].param));
  return runs;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "param,precision,recall,f1\n";
  for (const auto& row : rows) {
    out << format_full(row.param) << ',' << format_full(row.rep.precision) << ','
        << format_full(row.rep.recall) << ',' << format_full(row.rep.f1) << '\n';
  }
  return out.str();
}

std::string format_report(const EvalReport& rep) {
  std::ostringstream out;
  auto line = [&out](const ClassMetrics& m) {
    out << "  " << m.name << ": precision " << display_percent(m.precision) << "% recall "
        << display_percent(m.recall) << "% f1 " << display_percent(m.f1) << "% (support "
        << m.support << ")";
    if (m.precision_defined_zero || m.recall_defined_zero) out << " [degenerate]";
    out << '\n';
  };
  line(rep.positive);
  line(rep.negative);
  out << "  average (" << averaging_name(rep.averaging) << "): precision "
      << display_percent(rep.precision) << "% recall " << display_percent(rep.recall) << "% f1 "
      << display_percent(rep.f1) << "%\n";
  out << "  detected " << rep.n_detected << " of " << rep.n_total << " samples as "
      << rep.positive.name << '\n';
  return out.str();
}

}  // namespace deepgen
