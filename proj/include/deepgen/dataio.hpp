#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "deepgen/tensor.hpp"

namespace deepgen {

// Samples-by-genes expression matrix with identifiers and optional labels.
// labels is either empty (unlabeled) or one class tag per sample.
struct ExpressionMatrix {
  Tensor values;  // {n_samples, n_genes}
  std::vector<std::string> sample_ids;
  std::vector<std::string> gene_ids;
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, std::string>> metadata;

  std::size_t n_samples() const { return sample_ids.size(); }
  std::size_t n_genes() const { return gene_ids.size(); }
  bool labeled() const { return !labels.empty(); }
};

// Throws if ids/labels/values disagree or any value is non-finite.
void validate(const ExpressionMatrix& m);

// GEO series-matrix: `!`-prefixed metadata, then a tab-delimited table bounded
// by !series_matrix_table_begin / !series_matrix_table_end whose header row
// holds sample accessions and whose first column holds probe ids. The parsed
// table is transposed to samples x genes.
ExpressionMatrix parse_series_matrix(std::istream& in);
ExpressionMatrix parse_series_matrix(const std::string& text);

// Fixture writer for the same format. Values are emitted with enough digits
// to re-parse bit-exactly. Labels are not part of the format.
std::string write_series_matrix(const ExpressionMatrix& m);

enum class TsvOrientation { genes_in_rows, samples_in_rows };

// Plain tab-delimited numeric table with one header row of ids and one id
// column. The header may or may not carry a corner cell above the id column;
// both layouts are accepted. Negative values pass through.
ExpressionMatrix parse_tsv_matrix(std::istream& in, TsvOrientation orientation);
ExpressionMatrix parse_tsv_matrix(const std::string& text, TsvOrientation orientation);

// Two-column TSV `accession<TAB>class`. Blank lines and #-comments skipped.
std::map<std::string, std::string> load_label_map(std::istream& in);
std::map<std::string, std::string> load_label_map(const std::string& text);

// Returns a copy with labels filled from the map. Every sample id must be
// present; missing ids are all listed in the error.
ExpressionMatrix attach_labels(const ExpressionMatrix& m,
                               const std::map<std::string, std::string>& label_map);

// Grows every sample of `class_tag` to `times` total copies; copies append
// after the original rows with suffixed sample ids. With jitter_sigma > 0 the
// copies get Gaussian noise instead of being bit-identical.
ExpressionMatrix augment_replicate(const ExpressionMatrix& m, const std::string& class_tag,
                                   std::size_t times, double jitter_sigma = 0.0,
                                   std::uint64_t seed = 0);

// Per-gene linear rescale learned from one matrix, applicable to another.
struct MinMaxScaler {
  std::vector<double> lo, hi;
  static MinMaxScaler fit(const ExpressionMatrix& m);
  // Constant genes map to 0. With clamp, outputs are pinned to [0,1] so a
  // matrix outside the fitted range still yields valid unit-interval data.
  ExpressionMatrix apply(const ExpressionMatrix& m, bool clamp = false) const;
};

// fit + apply on the same matrix.
ExpressionMatrix minmax_scale(const ExpressionMatrix& m);

struct SplitSpec {
  double test_fraction = 0.5;
  std::uint64_t seed = 0;
  bool stratified = true;
};

// Shuffles samples and splits them. Stratified mode preserves class ratios
// within rounding; on a half-sample tie the extra sample goes to train.
std::pair<ExpressionMatrix, ExpressionMatrix> shuffle_split(const ExpressionMatrix& m,
                                                            const SplitSpec& spec);

// Row selections and concatenation (gene ids must match exactly).
ExpressionMatrix subset(const ExpressionMatrix& m, const std::vector<std::size_t>& rows);
ExpressionMatrix select_labels(const ExpressionMatrix& m,
                               const std::vector<std::string>& keep);
ExpressionMatrix drop_label(const ExpressionMatrix& m, const std::string& tag);
ExpressionMatrix concat_samples(const ExpressionMatrix& a, const ExpressionMatrix& b);

// Distinct labels in first-appearance order.
std::vector<std::string> label_order(const ExpressionMatrix& m);

// Number of samples carrying the tag.
std::size_t count_label(const ExpressionMatrix& m, const std::string& tag);

}  // namespace deepgen
