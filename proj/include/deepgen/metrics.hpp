#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace deepgen {

// Binary confusion counts. Label 1 is the positive class.
struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const { return tp + fp + fn + tn; }
};

// Exact counts from paired label vectors. Labels must be 0 or 1.
ConfusionCounts confusion(const std::vector<int>& truth, const std::vector<int>& pred);

enum class Averaging { macro, weighted };

std::string averaging_name(Averaging mode);

struct ClassMetrics {
  std::string name;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t support = 0;  // true members of this class
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  // Degenerate denominators report 0 instead of throwing; the flags record it.
  bool precision_defined_zero = false;
  bool recall_defined_zero = false;
};

struct EvalReport {
  ClassMetrics positive, negative;
  Averaging averaging = Averaging::weighted;
  double precision = 0.0, recall = 0.0, f1 = 0.0;  // averaged over both classes
  std::size_t n_detected = 0;  // samples predicted positive
  std::size_t n_total = 0;
};

// Per-class precision/recall/F1 for both classes plus the averaged row.
// Stored values keep full precision; rounding happens only in display helpers.
EvalReport report(const ConfusionCounts& counts, Averaging mode = Averaging::weighted,
                  const std::string& positive_name = "positive",
                  const std::string& negative_name = "negative");

// Fraction in [0,1] to nearest integer percent.
int display_percent(double fraction);

// Checks whether displayed integer percentages (P, R, F1) can come from one
// underlying (p, r) pair: some real pair inside the half-unit rounding windows
// of P and R must have a harmonic mean that rounds to F1.
bool f1_round_consistent(int precision_pct, int recall_pct, int f1_pct);

// One hyperparameter sweep result.
struct SweepRow {
  double param = 0.0;
  EvalReport rep;
};

// Orders rows by ascending param value. Duplicate param values are an error.
std::vector<SweepRow> sweep_table(std::vector<SweepRow> runs);

// CSV with header `param,precision,recall,f1`, full-precision floats, one row
// per run. Row metrics are the averaged figures of each report.
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Multi-line human-readable summary; always names the averaging mode.
std::string format_report(const EvalReport& rep);

}  // namespace deepgen
