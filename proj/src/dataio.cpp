#include "deepgen/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "deepgen/errors.hpp"
#include "deepgen/rng.hpp"
#include "deepgen/textutil.hpp"

namespace deepgen {
namespace {

constexpr const char* kTableBegin = "!series_matrix_table_begin";
constexpr const char* kTableEnd = "!series_matrix_table_end";

double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
  const std::string cell = strip_quotes(trim(raw));
  if (cell.empty()) throw parse_error("empty cell", row, col);
  double v = 0.0;
  if (!parse_double_strict(cell, &v))
    throw parse_error("non-numeric cell \"" + cell + "\"", row, col);
  return v;
}

}  // namespace

void validate(const ExpressionMatrix& m) {
  if (m.values.rank() != 2) throw dimension_error("expression values must be a matrix");
  if (m.values.dim(0) != m.sample_ids.size())
    throw dimension_error("sample id count " + std::to_string(m.sample_ids.size()) +
                          " does not match " + std::to_string(m.values.dim(0)) + " rows");
  if (m.values.dim(1) != m.gene_ids.size())
    throw dimension_error("gene id count " + std::to_string(m.gene_ids.size()) +
                          " does not match " + std::to_string(m.values.dim(1)) + " columns");
  if (!m.labels.empty() && m.labels.size() != m.sample_ids.size())
    throw label_error("labels must be empty or cover every sample");
  check_finite(m.values, "expression matrix");
}

ExpressionMatrix parse_series_matrix(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool saw_begin = false, saw_end = false;
  ExpressionMatrix out;
  std::vector<std::vector<double>> probe_rows;  // probes x samples

  while (next_line(in, &line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!saw_begin) {
      if (line == kTableBegin) {
        saw_begin = true;
        // Header row: corner cell, then sample accessions.
        if (!next_line(in, &line)) throw format_error("table begins at end of stream", line_no);
        ++line_no;
        const auto cells = split(line, '\t');
        if (cells.size() < 2) throw format_error("table header has no sample columns", line_no);
        for (std::size_t i = 1; i < cells.size(); ++i)
          out.sample_ids.push_back(strip_quotes(trim(cells[i])));
        continue;
      }
      if (line[0] != '!')
        throw format_error("expected !-prefixed metadata before table", line_no);
      const auto cells = split(line.substr(1), '\t');
      std::string value;
      for (std::size_t i = 1; i < cells.size(); ++i) {
        if (i > 1) value += '\t';
        value += strip_quotes(cells[i]);
      }
      out.metadata.emplace_back(cells[0], value);
      continue;
    }
    if (!saw_end) {
      if (line == kTableEnd) {
        saw_end = true;
        continue;
      }
      if (line == kTableBegin) throw format_error("nested table begin marker", line_no);
      const auto cells = split(line, '\t');
      if (cells.size() != out.sample_ids.size() + 1)
        throw format_error("ragged row: " + std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(out.sample_ids.size() + 1),
                           line_no);
      out.gene_ids.push_back(strip_quotes(trim(cells[0])));
      std::vector<double> row(out.sample_ids.size());
      for (std::size_t i = 1; i < cells.size(); ++i)
        row[i - 1] = parse_cell(cells[i], probe_rows.size() + 1, i);
      probe_rows.push_back(std::move(row));
      continue;
    }
    // Trailing metadata after the table is tolerated.
    if (line[0] != '!') throw format_error("unexpected content after table end", line_no);
    const auto cells = split(line.substr(1), '\t');
    std::string value;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      if (i > 1) value += '\t';
      value += strip_quotes(cells[i]);
    }
    out.metadata.emplace_back(cells[0], value);
  }
  if (!saw_begin) throw format_error(std::string(kTableBegin) + " marker not found", line_no);
  if (!saw_end) throw format_error(std::string(kTableEnd) + " marker not found", line_no);
  if (probe_rows.empty()) throw format_error("table has no probe rows", line_no);

  // Transpose probes x samples to samples x genes.
  const std::size_t ns = out.sample_ids.size(), ng = out.gene_ids.size();
  out.values = Tensor({ns, ng});
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t s = 0; s < ns; ++s) out.values.at(s, g) = probe_rows[g][s];
  validate(out);
  return out;
}

ExpressionMatrix parse_series_matrix(const std::string& text) {
  std::istringstream in(text);
  return parse_series_matrix(in);
}

std::string write_series_matrix(const ExpressionMatrix& m) {
  validate(m);
  std::ostringstream out;
  for (const auto& [k, v] : m.metadata) out << '!' << k << "\t\"" << v << "\"\n";
  out << kTableBegin << '\n';
  out << "\"ID_REF\"";
  for (const auto& id : m.sample_ids) out << "\t\"" << id << '"';
  out << '\n';
  for (std::size_t g = 0; g < m.n_genes(); ++g) {
    out << '"' << m.gene_ids[g] << '"';
    for (std::size_t s = 0; s < m.n_samples(); ++s)
      out << '\t' << format_full(m.values.at(s, g));
    out << '\n';
  }
  out << kTableEnd << '\n';
  return out.str();
}

ExpressionMatrix parse_tsv_matrix(std::istream& in, TsvOrientation orientation) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<std::string> row_ids;
  std::vector<std::vector<double>> rows;

  while (next_line(in, &line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, '\t');
    if (header.empty()) {
      header.reserve(cells.size());
      for (const auto& c : cells) header.push_back(strip_quotes(trim(c)));
      continue;
    }
    if (rows.empty()) {
      // First data row fixes the width; the header is allowed to omit the
      // corner cell above the id column.
      if (cells.size() == header.size() + 1) {
        // no corner cell
      } else if (cells.size() == header.size()) {
        header.erase(header.begin());
      } else {
        throw format_error("header width does not match data rows", line_no);
      }
    } else if (cells.size() != header.size() + 1) {
      throw format_error("ragged row: " + std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size() + 1),
                         line_no);
    }
    row_ids.push_back(strip_quotes(trim(cells[0])));
    std::vector<double> row(header.size());
    for (std::size_t i = 1; i < cells.size(); ++i)
      row[i - 1] = parse_cell(cells[i], rows.size() + 1, i);
    rows.push_back(std::move(row));
  }
  if (header.empty()) throw format_error("empty table", line_no);
  if (rows.empty()) throw format_error("no data rows", line_no);

  ExpressionMatrix out;
  if (orientation == TsvOrientation::samples_in_rows) {
    out.sample_ids = std::move(row_ids);
    out.gene_ids = std::move(header);
    out.values = Tensor({out.sample_ids.size(), out.gene_ids.size()});
    for (std::size_t s = 0; s < out.n_samples(); ++s)
      for (std::size_t g = 0; g < out.n_genes(); ++g) out.values.at(s, g) = rows[s][g];
  } else {
    out.sample_ids = std::move(header);
    out.gene_ids = std::move(row_ids);
    out.values = Tensor({out.sample_ids.size(), out.gene_ids.size()});
    for (std::size_t g = 0; g < out.n_genes(); ++g)
      for (std::size_t s = 0; s < out.n_samples(); ++s) out.values.at(s, g) = rows[g][s];
  }
  validate(out);
  return out;
}

ExpressionMatrix parse_tsv_matrix(const std::string& text, TsvOrientation orientation) {
  std::istringstream in(text);
  return parse_tsv_matrix(in, orientation);
}

std::map<std::string, std::string> load_label_map(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, &line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split(line, '\t');
    if (cells.size() != 2)
      throw format_error("label map rows need exactly accession<TAB>class", line_no);
    const std::string acc = strip_quotes(trim(cells[0]));
    const std::string cls = strip_quotes(trim(cells[1]));
    if (acc.empty() || cls.empty()) throw format_error("empty accession or class", line_no);
    if (!out.emplace(acc, cls).second)
      throw format_error("duplicate accession " + acc, line_no);
  }
  return out;
}

std::map<std::string, std::string> load_label_map(const std::string& text) {
  std::istringstream in(text);
  return load_label_map(in);
}

ExpressionMatrix attach_labels(const ExpressionMatrix& m,
                               const std::map<std::string, std::string>& label_map) {
  ExpressionMatrix out = m;
  out.labels.clear();
  out.labels.reserve(m.n_samples());
  std::vector<std::string> missing;
  for (const auto& id : m.sample_ids) {
    const auto it = label_map.find(id);
    if (it == label_map.end()) {
      missing.push_back(id);
      continue;
    }
    out.labels.push_back(it->second);
  }
  if (!missing.empty()) {
    std::string msg = "no label for:";
    for (const auto& id : missing) msg += ' ' + id;
    throw label_error(msg);
  }
  return out;
}

ExpressionMatrix augment_replicate(const ExpressionMatrix& m, const std::string& class_tag,
                                   std::size_t times, double jitter_sigma, std::uint64_t seed) {
  validate(m);
  if (!m.labeled()) throw label_error("augmentation needs labels");
  if (times < 1) throw config_error("augmentation count must be at least 1");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < m.n_samples(); ++i)
    if (m.labels[i] == class_tag) members.push_back(i);
  if (members.empty()) throw label_error("no samples labeled " + class_tag);
  if (times == 1) return m;

  const std::size_t ng = m.n_genes();
  const std::size_t extra = members.size() * (times - 1);
  ExpressionMatrix out = m;
  Tensor grown({m.n_samples() + extra, ng});
  std::copy(m.values.data(), m.values.data() + m.values.size(), grown.values().begin());

  Rng rng(seed);
  std::size_t w = m.n_samples();
  for (std::size_t round = 1; round < times; ++round) {
    for (const std::size_t src : members) {
      for (std::size_t g = 0; g < ng; ++g) {
        double v = m.values.at(src, g);
        if (jitter_sigma > 0.0) v += rng.normal(0.0, jitter_sigma);
        grown.at(w, g) = v;
      }
      out.sample_ids.push_back(m.sample_ids[src] + "_aug" + std::to_string(round));
      out.labels.push_back(class_tag);
      ++w;
    }
  }
  out.values = std::move(grown);
  validate(out);
  return out;
}

MinMaxScaler MinMaxScaler::fit(const ExpressionMatrix& m) {
  validate(m);
  if (m.n_samples() == 0) throw dimension_error("cannot fit scaler on empty matrix");
  MinMaxScaler s;
  const std::size_t ng = m.n_genes();
  s.lo.assign(ng, 0.0);
  s.hi.assign(ng, 0.0);
  for (std::size_t g = 0; g < ng; ++g) {
    double lo = m.values.at(0, g), hi = lo;
    for (std::size_t r = 1; r < m.n_samples(); ++r) {
      const double v = m.values.at(r, g);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    s.lo[g] = lo;
    s.hi[g] = hi;
  }
  return s;
}

ExpressionMatrix MinMaxScaler::apply(const ExpressionMatrix& m, bool clamp) const {
  validate(m);
  if (m.n_genes() != lo.size())
    throw dimension_error("scaler fitted on " + std::to_string(lo.size()) + " genes, got " +
                          std::to_string(m.n_genes()));
  ExpressionMatrix out = m;
  for (std::size_t g = 0; g < lo.size(); ++g) {
    const double range = hi[g] - lo[g];
    for (std::size_t r = 0; r < m.n_samples(); ++r) {
      double v = range > 0.0 ? (m.values.at(r, g) - lo[g]) / range : 0.0;
      if (clamp) v = std::clamp(v, 0.0, 1.0);
      out.values.at(r, g) = v;
    }
  }
  return out;
}

ExpressionMatrix minmax_scale(const ExpressionMatrix& m) {
  return MinMaxScaler::fit(m).apply(m);
}

std::pair<ExpressionMatrix, ExpressionMatrix> shuffle_split(const ExpressionMatrix& m,
                                                            const SplitSpec& spec) {
  validate(m);
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw config_error("test fraction must lie in (0, 1), got " +
                       format_full(spec.test_fraction));
  const std::size_t n = m.n_samples();
  if (n < 2) throw split_error("need at least 2 samples to split");
  if (spec.stratified && !m.labeled()) throw split_error("stratified split needs labels");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(order);

  // Half-sample ties round down, sending the extra sample to train.
  auto test_count = [&spec](std::size_t group) {
    const double exact = static_cast<double>(group) * spec.test_fraction;
    return static_cast<std::size_t>(std::ceil(exact - 0.5));
  };

  std::vector<std::size_t> test_rows, train_rows;
  if (spec.stratified) {
    for (const auto& tag : label_order(m)) {
      std::vector<std::size_t> group;
      for (const std::size_t i : order)
        if (m.labels[i] == tag) group.push_back(i);
      const std::size_t nt = test_count(group.size());
      if (nt == 0 || nt == group.size())
        throw split_error("class " + tag + " with " + std::to_string(group.size()) +
                          " samples cannot give both sides at fraction " +
                          format_full(spec.test_fraction));
      for (std::size_t i = 0; i < group.size(); ++i)
        (i < nt ? test_rows : train_rows).push_back(group[i]);
    }
  } else {
    const std::size_t nt = test_count(n);
    if (nt == 0 || nt == n)
      throw split_error("split leaves one side empty at fraction " +
                        format_full(spec.test_fraction));
    for (std::size_t i = 0; i < n; ++i) (i < nt ? test_rows : train_rows).push_back(order[i]);
  }
  return {subset(m, train_rows), subset(m, test_rows)};
}

ExpressionMatrix subset(const ExpressionMatrix& m, const std::vector<std::size_t>& rows) {
  validate(m);
  if (rows.empty()) throw label_error("selection matched no samples");
  ExpressionMatrix out;
  out.gene_ids = m.gene_ids;
  out.metadata = m.metadata;
  out.values = Tensor({rows.size(), m.n_genes()});
  std::size_t w = 0;
  for (const std::size_t r : rows) {
    if (r >= m.n_samples()) throw dimension_error("subset row " + std::to_string(r) +
                                                  " out of range");
    out.sample_ids.push_back(m.sample_ids[r]);
    if (m.labeled()) out.labels.push_back(m.labels[r]);
    for (std::size_t g = 0; g < m.n_genes(); ++g) out.values.at(w, g) = m.values.at(r, g);
    ++w;
  }
  return out;
}

ExpressionMatrix select_labels(const ExpressionMatrix& m, const std::vector<std::string>& keep) {
  if (!m.labeled()) throw label_error("selection needs labels");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < m.n_samples(); ++i)
    if (std::find(keep.begin(), keep.end(), m.labels[i]) != keep.end()) rows.push_back(i);
  return subset(m, rows);
}

ExpressionMatrix drop_label(const ExpressionMatrix& m, const std::string& tag) {
  if (!m.labeled()) throw label_error("selection needs labels");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < m.n_samples(); ++i)
    if (m.labels[i] != tag) rows.push_back(i);
  return subset(m, rows);
}

ExpressionMatrix concat_samples(const ExpressionMatrix& a, const ExpressionMatrix& b) {
  validate(a);
  validate(b);
  if (a.gene_ids != b.gene_ids)
    throw dimension_error("cannot concatenate matrices with different gene panels");
  if (a.labeled() != b.labeled())
    throw label_error("cannot concatenate labeled with unlabeled samples");
  ExpressionMatrix out;
  out.gene_ids = a.gene_ids;
  out.metadata = a.metadata;
  out.sample_ids = a.sample_ids;
  out.sample_ids.insert(out.sample_ids.end(), b.sample_ids.begin(), b.sample_ids.end());
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.values = Tensor({a.n_samples() + b.n_samples(), a.n_genes()});
  std::copy(a.values.data(), a.values.data() + a.values.size(), out.values.values().begin());
  std::copy(b.values.data(), b.values.data() + b.values.size(),
            out.values.values().begin() + static_cast<std::ptrdiff_t>(a.values.size()));
  validate(out);
  return out;
}

std::vector<std::string> label_order(const ExpressionMatrix& m) {
  std::vector<std::string> order;
  for (const auto& tag : m.labels)
    if (std::find(order.begin(), order.end(), tag) == order.end()) order.push_back(tag);
  return order;
}

std::size_t count_label(const ExpressionMatrix& m, const std::string& tag) {
  return static_cast<std::size_t>(std::count(m.labels.begin(), m.labels.end(), tag));
}

}  // namespace deepgen
