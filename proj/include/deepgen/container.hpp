#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "deepgen/tensor.hpp"

namespace deepgen {

// Versioned text container for model checkpoints. Layout:
//
//   deepgen-container 1
//   kind <model-kind>
//   meta <key> <value...>          (zero or more; value may contain spaces)
//   tensor <name> <rank> <dims...> (one per tensor)
//   <values, space-separated hexfloat, wrapped at 8 per line>
//   end
//
// Hexfloat payloads make save/load bit-exact.
struct Container {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  // First value for key; throws format_error when absent.
  const std::string& meta_value(const std::string& key) const;
  bool has_meta(const std::string& key) const;
  const Tensor& tensor_named(const std::string& name) const;

  void add_meta(std::string key, std::string value);
  void add_tensor(std::string name, Tensor t);
};

void write_container(std::ostream& out, const Container& c);
Container read_container(std::istream& in);

void save_container(const std::string& path, const Container& c);
Container load_container(const std::string& path);

}  // namespace deepgen
