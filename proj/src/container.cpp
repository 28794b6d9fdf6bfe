#include "deepgen/container.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "deepgen/errors.hpp"
#include "deepgen/textutil.hpp"

namespace deepgen {
namespace {

constexpr const char* kMagic = "deepgen-container";
constexpr int kVersion = 1;
constexpr std::size_t kValuesPerLine = 8;

bool valid_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return false;
  return true;
}

double parse_value(const std::string& tok, std::size_t line_no) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + tok.size() || !std::isfinite(v))
    throw format_error("bad tensor value \"" + tok + "\"", line_no);
  return v;
}

}  // namespace

const std::string& Container::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw format_error("container missing meta key " + key, 0);
}

bool Container::has_meta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return true;
  return false;
}

const Tensor& Container::tensor_named(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw format_error("container missing tensor " + name, 0);
}

void Container::add_meta(std::string key, std::string value) {
  if (!valid_token(key)) throw config_error("meta key must be a single token");
  if (value.find('\n') != std::string::npos || value.find('\r') != std::string::npos)
    throw config_error("meta value must be a single line");
  meta.emplace_back(std::move(key), std::move(value));
}

void Container::add_tensor(std::string name, Tensor t) {
  if (!valid_token(name)) throw config_error("tensor name must be a single token");
  tensors.emplace_back(std::move(name), std::move(t));
}

void write_container(std::ostream& out, const Container& c) {
  if (!valid_token(c.kind)) throw config_error("container kind must be a single token");
  out << kMagic << ' ' << kVersion << '\n';
  out << "kind " << c.kind << '\n';
  for (const auto& [k, v] : c.meta) out << "meta " << k << ' ' << v << '\n';
  char buf[40];
  for (const auto& [name, t] : c.tensors) {
    out << "tensor " << name << ' ' << t.rank();
    for (std::size_t i = 0; i < t.rank(); ++i) out << ' ' << t.dim(i);
    out << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%a", t[i]);
      out << buf;
      out << ((i + 1) % kValuesPerLine == 0 || i + 1 == t.size() ? '\n' : ' ');
    }
  }
  out << "end\n";
}

Container read_container(std::istream& in) {
  Container c;
  std::string line;
  std::size_t line_no = 0;

  if (!next_line(in, &line)) throw format_error("empty container", 1);
  ++line_no;
  {
    const auto head = split(line, ' ');
    if (head.size() != 2 || head[0] != kMagic)
      throw format_error("not a " + std::string(kMagic) + " file", line_no);
    if (head[1] != std::to_string(kVersion))
      throw format_error("unsupported container version " + head[1], line_no);
  }
  if (!next_line(in, &line)) throw format_error("missing kind line", line_no + 1);
  ++line_no;
  {
    const auto kv = split(line, ' ');
    if (kv.size() != 2 || kv[0] != "kind")
      throw format_error("expected kind line, got \"" + line + "\"", line_no);
    c.kind = kv[1];
  }

  bool ended = false;
  while (next_line(in, &line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tok = split(line, ' ');
    if (tok[0] == "end") {
      ended = true;
      break;
    }
    if (tok[0] == "meta") {
      if (tok.size() < 3) throw format_error("meta needs key and value", line_no);
      std::string value = tok[2];
      for (std::size_t i = 3; i < tok.size(); ++i) value += ' ' + tok[i];
      c.meta.emplace_back(tok[1], value);
      continue;
    }
    if (tok[0] == "tensor") {
      if (tok.size() < 3) throw format_error("tensor needs name and rank", line_no);
      const std::string name = tok[1];
      std::size_t rank = 0;
      try {
        rank = static_cast<std::size_t>(std::stoul(tok[2]));
      } catch (const std::exception&) {
        throw format_error("bad tensor rank \"" + tok[2] + "\"", line_no);
      }
      if (tok.size() != 3 + rank)
        throw format_error("tensor header lists " + std::to_string(tok.size() - 3) +
                               " dims, rank says " + std::to_string(rank),
                           line_no);
      Shape shape(rank);
      for (std::size_t i = 0; i < rank; ++i) {
        try {
          shape[i] = static_cast<std::size_t>(std::stoul(tok[3 + i]));
        } catch (const std::exception&) {
          throw format_error("bad tensor dim \"" + tok[3 + i] + "\"", line_no);
        }
        if (shape[i] == 0) throw format_error("zero tensor dimension", line_no);
      }
      const std::size_t total = shape_product(shape);
      std::vector<double> data;
      data.reserve(total);
      while (data.size() < total) {
        if (!next_line(in, &line))
          throw format_error("tensor " + name + " truncated: " + std::to_string(data.size()) +
                                 " of " + std::to_string(total) + " values",
                             line_no);
        ++line_no;
        for (const auto& v : split(line, ' ')) {
          if (v.empty()) throw format_error("stray blank in tensor payload", line_no);
          if (data.size() == total)
            throw format_error("tensor " + name + " has extra values", line_no);
          data.push_back(parse_value(v, line_no));
        }
      }
      c.tensors.emplace_back(name, Tensor(std::move(shape), std::move(data)));
      continue;
    }
    throw format_error("unknown directive \"" + tok[0] + "\"", line_no);
  }
  if (!ended) throw format_error("missing end line", line_no + 1);
  return c;
}

void save_container(const std::string& path, const Container& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  write_container(out, c);
  out.flush();
  if (!out) throw io_error("write failed for " + path);
}

Container load_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  return read_container(in);
}

}  // namespace deepgen
