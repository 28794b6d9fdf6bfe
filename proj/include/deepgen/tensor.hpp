#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "deepgen/errors.hpp"
#include "deepgen/rng.hpp"

namespace deepgen {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& s);

// Dense row-major tensor of doubles. Rank-4 data uses the m x H x W x C
// layout everywhere (batch, rows, cols, channels).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor vec(std::vector<double> data);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const { return shape_to_string(shape_); }

  // Same storage, new shape; element count must match.
  Tensor reshaped(Shape shape) const;

  void fill(double v);

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_product(const Shape& s);

// Throws numeric_error when any element is NaN or Inf.
void check_finite(const Tensor& t, const char* where);

enum class Mode { train, infer };

enum class Activation { relu, leaky_relu, sigmoid };

// Logistic function with the input clamped to [-500, 500] so exp never overflows.
double sigmoid(double x);

// out = input . weights + bias (bias broadcast over rows).
// input m x d, weights d x u, bias u.
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

// Gradients of dense_forward given upstream d(loss)/d(out).
void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream,
                    Tensor& grad_weights, Tensor& grad_bias, Tensor& grad_input);

// Same-padding stride-1 cross-correlation. input m x H x W x Cin,
// kernels k x k x Cin x Cout (k odd), bias Cout; output m x H x W x Cout.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);

void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& upstream,
                     Tensor& grad_kernels, Tensor& grad_bias, Tensor& grad_input);

// Nearest-neighbour upsampling: each cell tiles an fy x fx block.
Tensor upsample2d(const Tensor& input, std::size_t fy, std::size_t fx);

// Gradient of upsample2d: sums the upstream over each tile.
Tensor upsample2d_backward(const Tensor& upstream, std::size_t fy, std::size_t fx);

Tensor activation_forward(const Tensor& input, Activation kind, double leak = 0.2);

// Elementwise derivative of the activation at `input`, times upstream.
Tensor activation_backward(const Tensor& input, const Tensor& upstream, Activation kind,
                           double leak = 0.2);

// Inverted dropout. Train mode zeroes each element with probability `rate`
// and scales survivors by 1/(1-rate); infer mode is the identity. The
// returned mask holds the applied per-element factors (0 or 1/(1-rate)).
std::pair<Tensor, Tensor> dropout_forward(const Tensor& input, double rate, Mode mode, Rng* rng);

}  // namespace deepgen
