#include "deepgen/tensor.hpp"

#include <cmath>

namespace deepgen {

std::string shape_to_string(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

std::size_t shape_product(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (std::size_t d : shape_) {
    if (d == 0) throw dimension_error("tensor dimensions must be positive, got " + shape_str());
  }
  data_.assign(shape_product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw dimension_error("tensor data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_str());
  }
}

Tensor Tensor::vec(std::vector<double> data) {
  Shape s{data.size()};
  return Tensor(std::move(s), std::move(data));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor(Shape{rows, cols}, std::move(data));
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_product(shape) != data_.size()) {
    throw dimension_error("cannot reshape " + shape_str() + " to " + shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { data_.assign(data_.size(), v); }

void check_finite(const Tensor& t, const char* where) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      throw numeric_error(std::string(where) + ": non-finite value produced");
    }
  }
}

double sigmoid(double x) {
  if (x > 500.0) x = 500.0;
  if (x < -500.0) x = -500.0;
  return 1.0 / (1.0 + std::exp(-x));
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 2 || weights.rank() != 2 || bias.rank() != 1 ||
      input.dim(1) != weights.dim(0) || weights.dim(1) != bias.dim(0)) {
    throw dimension_error("dense_forward: input " + input.shape_str() + " incompatible with weights " +
                          weights.shape_str() + " and bias " + bias.shape_str());
  }
  const std::size_t m = input.dim(0), d = input.dim(1), u = weights.dim(1);
  Tensor out(Shape{m, u});
  const double* x = input.data();
  const double* w = weights.data();
  double* o = out.data();
  for (std::size_t r = 0; r < m; ++r) {
    double* orow = o + r * u;
    for (std::size_t j = 0; j < u; ++j) orow[j] = bias[j];
    const double* xrow = x + r * d;
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = xrow[i];
      if (xi == 0.0) continue;
      const double* wrow = w + i * u;
      for (std::size_t j = 0; j < u; ++j) orow[j] += xi * wrow[j];
    }
  }
  check_finite(out, "dense_forward");
  return out;
}

void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream,
                    Tensor& grad_weights, Tensor& grad_bias, Tensor& grad_input) {
  const std::size_t m = input.dim(0), d = input.dim(1), u = weights.dim(1);
  if (upstream.rank() != 2 || upstream.dim(0) != m || upstream.dim(1) != u) {
    throw dimension_error("dense_backward: upstream " + upstream.shape_str() +
                          " does not match output shape (" + std::to_string(m) + ", " +
                          std::to_string(u) + ")");
  }
  grad_weights = Tensor(Shape{d, u});
  grad_bias = Tensor(Shape{u});
  grad_input = Tensor(Shape{m, d});
  const double* x = input.data();
  const double* w = weights.data();
  const double* g = upstream.data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* grow = g + r * u;
    const double* xrow = x + r * d;
    double* gxrow = grad_input.data() + r * d;
    for (std::size_t j = 0; j < u; ++j) grad_bias[j] += grow[j];
    for (std::size_t i = 0; i < d; ++i) {
      double* gwrow = grad_weights.data() + i * u;
      const double* wrow = w + i * u;
      const double xi = xrow[i];
      double acc = 0.0;
      for (std::size_t j = 0; j < u; ++j) {
        gwrow[j] += xi * grow[j];
        acc += grow[j] * wrow[j];
      }
      gxrow[i] = acc;
    }
  }
  check_finite(grad_weights, "dense_backward");
  check_finite(grad_bias, "dense_backward");
  check_finite(grad_input, "dense_backward");
}

namespace {

void check_conv_shapes(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  if (input.rank() != 4 || kernels.rank() != 4 || bias.rank() != 1) {
    throw dimension_error("conv2d: input must be rank 4 and kernels rank 4, got input " +
                          input.shape_str() + ", kernels " + kernels.shape_str());
  }
  if (kernels.dim(0) != kernels.dim(1)) {
    throw config_error("conv2d: kernels must be square, got " + kernels.shape_str());
  }
  if (kernels.dim(0) % 2 == 0) {
    throw config_error("conv2d: kernel size must be odd for same padding, got " +
                       std::to_string(kernels.dim(0)));
  }
  if (input.dim(3) != kernels.dim(2) || kernels.dim(3) != bias.dim(0)) {
    throw dimension_error("conv2d: input " + input.shape_str() + " incompatible with kernels " +
                          kernels.shape_str() + " and bias " + bias.shape_str());
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  check_conv_shapes(input, kernels, bias);
  const std::size_t m = input.dim(0), h = input.dim(1), w = input.dim(2), cin = input.dim(3);
  const std::size_t k = kernels.dim(0), cout = kernels.dim(3);
  const std::size_t pad = k / 2;
  Tensor out(Shape{m, h, w, cout});
  const double* in = input.data();
  const double* kn = kernels.data();
  double* o = out.data();
  for (std::size_t n = 0; n < m; ++n) {
    const double* img = in + n * h * w * cin;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double* orow = o + ((n * h + y) * w + x) * cout;
        for (std::size_t co = 0; co < cout; ++co) orow[co] = bias[co];
        for (std::size_t dy = 0; dy < k; ++dy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t dx = 0; dx < k; ++dx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            const double* irow = img + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * cin;
            const double* krow = kn + (dy * k + dx) * cin * cout;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double v = irow[ci];
              if (v == 0.0) continue;
              const double* kc = krow + ci * cout;
              for (std::size_t co = 0; co < cout; ++co) orow[co] += v * kc[co];
            }
          }
        }
      }
    }
  }
  check_finite(out, "conv2d_forward");
  return out;
}

void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& upstream,
                     Tensor& grad_kernels, Tensor& grad_bias, Tensor& grad_input) {
  const std::size_t m = input.dim(0), h = input.dim(1), w = input.dim(2), cin = input.dim(3);
  const std::size_t k = kernels.dim(0), cout = kernels.dim(3);
  const std::size_t pad = k / 2;
  if (upstream.rank() != 4 || upstream.dim(0) != m || upstream.dim(1) != h ||
      upstream.dim(2) != w || upstream.dim(3) != cout) {
    throw dimension_error("conv2d_backward: upstream " + upstream.shape_str() +
                          " does not match output shape");
  }
  grad_kernels = Tensor(Shape{k, k, cin, cout});
  grad_bias = Tensor(Shape{cout});
  grad_input = Tensor(Shape{m, h, w, cin});
  const double* in = input.data();
  const double* kn = kernels.data();
  const double* g = upstream.data();
  for (std::size_t n = 0; n < m; ++n) {
    const double* img = in + n * h * w * cin;
    double* gimg = grad_input.data() + n * h * w * cin;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double* grow = g + ((n * h + y) * w + x) * cout;
        for (std::size_t co = 0; co < cout; ++co) grad_bias[co] += grow[co];
        for (std::size_t dy = 0; dy < k; ++dy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t dx = 0; dx < k; ++dx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            const std::size_t off = (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * cin;
            const double* irow = img + off;
            double* girow = gimg + off;
            const std::size_t kbase = (dy * k + dx) * cin * cout;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double* kc = kn + kbase + ci * cout;
              double* gkc = grad_kernels.data() + kbase + ci * cout;
              const double v = irow[ci];
              double acc = 0.0;
              for (std::size_t co = 0; co < cout; ++co) {
                gkc[co] += v * grow[co];
                acc += grow[co] * kc[co];
              }
              girow[ci] += acc;
            }
          }
        }
      }
    }
  }
  check_finite(grad_kernels, "conv2d_backward");
  check_finite(grad_bias, "conv2d_backward");
  check_finite(grad_input, "conv2d_backward");
}

Tensor upsample2d(const Tensor& input, std::size_t fy, std::size_t fx) {
  if (input.rank() != 4) {
    throw dimension_error("upsample2d: input must be rank 4, got " + input.shape_str());
  }
  if (fy == 0 || fx == 0) {
    throw config_error("upsample2d: factors must be >= 1, got (" + std::to_string(fy) + ", " +
                       std::to_string(fx) + ")");
  }
  const std::size_t m = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
  Tensor out(Shape{m, h * fy, w * fx, c});
  const std::size_t oh = h * fy, ow = w * fx;
  const double* in = input.data();
  double* o = out.data();
  for (std::size_t n = 0; n < m; ++n) {
    for (std::size_t y = 0; y < oh; ++y) {
      const std::size_t sy = y / fy;
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t sx = x / fx;
        const double* irow = in + ((n * h + sy) * w + sx) * c;
        double* orow = o + ((n * oh + y) * ow + x) * c;
        for (std::size_t ci = 0; ci < c; ++ci) orow[ci] = irow[ci];
      }
    }
  }
  return out;
}

Tensor upsample2d_backward(const Tensor& upstream, std::size_t fy, std::size_t fx) {
  if (upstream.rank() != 4 || upstream.dim(1) % fy != 0 || upstream.dim(2) % fx != 0) {
    throw dimension_error("upsample2d_backward: upstream " + upstream.shape_str() +
                          " not divisible by factors");
  }
  const std::size_t m = upstream.dim(0), oh = upstream.dim(1), ow = upstream.dim(2), c = upstream.dim(3);
  const std::size_t h = oh / fy, w = ow / fx;
  Tensor grad(Shape{m, h, w, c});
  const double* g = upstream.data();
  for (std::size_t n = 0; n < m; ++n) {
    for (std::size_t y = 0; y < oh; ++y) {
      const std::size_t sy = y / fy;
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t sx = x / fx;
        const double* grow = g + ((n * oh + y) * ow + x) * c;
        double* orow = grad.data() + ((n * h + sy) * w + sx) * c;
        for (std::size_t ci = 0; ci < c; ++ci) orow[ci] += grow[ci];
      }
    }
  }
  check_finite(grad, "upsample2d_backward");
  return grad;
}

Tensor activation_forward(const Tensor& input, Activation kind, double leak) {
  if (kind == Activation::leaky_relu && (leak <= 0.0 || leak >= 1.0)) {
    throw config_error("leaky_relu slope must lie in (0, 1), got " + std::to_string(leak));
  }
  Tensor out = input;
  for (double& v : out.values()) {
    switch (kind) {
      case Activation::relu:
        v = v > 0.0 ? v : 0.0;
        break;
      case Activation::leaky_relu:
        v = v > 0.0 ? v : leak * v;
        break;
      case Activation::sigmoid:
        v = sigmoid(v);
        break;
    }
  }
  check_finite(out, "activation_forward");
  return out;
}

Tensor activation_backward(const Tensor& input, const Tensor& upstream, Activation kind,
                           double leak) {
  if (!input.same_shape(upstream)) {
    throw dimension_error("activation_backward: upstream " + upstream.shape_str() +
                          " does not match input " + input.shape_str());
  }
  Tensor grad = upstream;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double x = input[i];
    switch (kind) {
      case Activation::relu:
        grad[i] *= x > 0.0 ? 1.0 : 0.0;
        break;
      case Activation::leaky_relu:
        grad[i] *= x > 0.0 ? 1.0 : leak;
        break;
      case Activation::sigmoid: {
        const double s = sigmoid(x);
        grad[i] *= s * (1.0 - s);
        break;
      }
    }
  }
  check_finite(grad, "activation_backward");
  return grad;
}

std::pair<Tensor, Tensor> dropout_forward(const Tensor& input, double rate, Mode mode, Rng* rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw config_error("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  Tensor mask(input.shape(), 1.0);
  if (mode == Mode::infer || rate == 0.0) {
    return {input, mask};
  }
  if (rng == nullptr) throw config_error("dropout training requires an rng");
  const double scale = 1.0 / (1.0 - rate);
  Tensor out = input;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (rng->uniform() < rate) {
      mask[i] = 0.0;
      out[i] = 0.0;
    } else {
      mask[i] = scale;
      out[i] *= scale;
    }
  }
  check_finite(out, "dropout_forward");
  return {out, mask};
}

}  // namespace deepgen
