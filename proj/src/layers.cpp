#include "deepgen/layers.hpp"

#include <cmath>
#include <utility>

#include "deepgen/errors.hpp"

namespace deepgen {

void Layer::require_cache() const {
  if (!has_cache_) throw state_error("backward called before forward");
}

// ---- dense ----

DenseLayer::DenseLayer(std::size_t in, std::size_t out)
    : weights({in, out}), bias({out}) {}

void DenseLayer::init(Rng& rng, double stddev) {
  for (auto& w : weights.values()) w = rng.normal(0.0, stddev);
  bias.fill(0.0);
}

Tensor DenseLayer::forward(const Tensor& input, Mode mode, Rng*) {
  if (mode == Mode::train) {
    input_ = input;
    has_cache_ = true;
  }
  return dense_forward(input, weights, bias);
}

LayerGrad DenseLayer::backward(const Tensor& upstream) {
  require_cache();
  has_cache_ = false;
  LayerGrad g;
  Tensor gw, gb, gx;
  dense_backward(input_, weights, upstream, gw, gb, gx);
  g.param_grads = {std::move(gw), std::move(gb)};
  g.input_grad = std::move(gx);
  return g;
}

// ---- conv2d ----

Conv2dLayer::Conv2dLayer(std::size_t kernel, std::size_t in_channels, std::size_t out_channels)
    : kernels({kernel, kernel, in_channels, out_channels}), bias({out_channels}) {}

void Conv2dLayer::init(Rng& rng, double stddev) {
  for (auto& w : kernels.values()) w = rng.normal(0.0, stddev);
  bias.fill(0.0);
}

Tensor Conv2dLayer::forward(const Tensor& input, Mode mode, Rng*) {
  if (mode == Mode::train) {
    input_ = input;
    has_cache_ = true;
  }
  return conv2d_forward(input, kernels, bias);
}

LayerGrad Conv2dLayer::backward(const Tensor& upstream) {
  require_cache();
  has_cache_ = false;
  LayerGrad g;
  Tensor gk, gb, gx;
  conv2d_backward(input_, kernels, upstream, gk, gb, gx);
  g.param_grads = {std::move(gk), std::move(gb)};
  g.input_grad = std::move(gx);
  return g;
}

// ---- upsample ----

UpsampleLayer::UpsampleLayer(std::size_t fy, std::size_t fx) : fy_(fy), fx_(fx) {
  if (fy == 0 || fx == 0) throw config_error("upsample factors must be positive");
}

Tensor UpsampleLayer::forward(const Tensor& input, Mode mode, Rng*) {
  if (mode == Mode::train) has_cache_ = true;
  return upsample2d(input, fy_, fx_);
}

LayerGrad UpsampleLayer::backward(const Tensor& upstream) {
  require_cache();
  has_cache_ = false;
  LayerGrad g;
  g.input_grad = upsample2d_backward(upstream, fy_, fx_);
  return g;
}

// ---- activation ----

ActivationLayer::ActivationLayer(Activation act, double leak) : act_(act), leak_(leak) {
  if (act == Activation::leaky_relu && (leak <= 0.0 || leak >= 1.0))
    throw config_error("leaky relu slope must be in (0, 1)");
}

std::string ActivationLayer::kind() const {
  switch (act_) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "activation";
}

Tensor ActivationLayer::forward(const Tensor& input, Mode mode, Rng*) {
  if (mode == Mode::train) {
    input_ = input;
    has_cache_ = true;
  }
  return activation_forward(input, act_, leak_);
}

LayerGrad ActivationLayer::backward(const Tensor& upstream) {
  require_cache();
  has_cache_ = false;
  LayerGrad g;
  g.input_grad = activation_backward(input_, upstream, act_, leak_);
  return g;
}

// ---- batchnorm ----

namespace {

std::size_t checked_features(std::size_t features) {
  if (features == 0) throw config_error("batchnorm needs at least one feature");
  return features;
}

}  // namespace

BatchNormLayer::BatchNormLayer(std::size_t features, double eps, double momentum)
    : gamma({checked_features(features)}, 1.0),
      beta({features}),
      running_mean({features}),
      running_var({features}, 1.0),
      features_(features),
      eps_(eps),
      momentum_(momentum) {
  if (eps <= 0.0) throw config_error("batchnorm eps must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw config_error("batchnorm momentum must be in [0, 1)");
}

Tensor BatchNormLayer::forward(const Tensor& input, Mode mode, Rng*) {
  if (input.rank() < 2) throw dimension_error("batchnorm input must have a batch axis");
  if (input.dim(input.rank() - 1) != features_)
    throw dimension_error("batchnorm feature axis mismatch: got " +
                          std::to_string(input.dim(input.rank() - 1)) + ", expected " +
                          std::to_string(features_));
  const std::size_t f = features_;
  const std::size_t rows = input.size() / f;  // everything except the feature axis
  mode_ = mode;
  input_ = input;

  Tensor out(input.shape());
  xhat_ = Tensor(input.shape());
  if (mode == Mode::train) {
    if (rows < 2) throw config_error("batchnorm training needs at least 2 rows per feature");
    mean_.assign(f, 0.0);
    var_.assign(f, 0.0);
    const double* x = input.data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < f; ++j) mean_[j] += x[r * f + j];
    for (std::size_t j = 0; j < f; ++j) mean_[j] /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < f; ++j) {
        const double d = x[r * f + j] - mean_[j];
        var_[j] += d * d;
      }
    for (std::size_t j = 0; j < f; ++j) var_[j] /= static_cast<double>(rows);

    for (std::size_t j = 0; j < f; ++j) {
      running_mean[j] = momentum_ * running_mean[j] + (1.0 - momentum_) * mean_[j];
      running_var[j] = momentum_ * running_var[j] + (1.0 - momentum_) * var_[j];
    }

    double* xh = xhat_.values().data();
    double* o = out.values().data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < f; ++j) {
        const std::size_t i = r * f + j;
        xh[i] = (x[i] - mean_[j]) / std::sqrt(var_[j] + eps_);
        o[i] = gamma[j] * xh[i] + beta[j];
      }
    has_cache_ = true;
  } else {
    const double* x = input.data();
    double* o = out.values().data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < f; ++j) {
        const std::size_t i = r * f + j;
        const double xh = (x[i] - running_mean[j]) / std::sqrt(running_var[j] + eps_);
        o[i] = gamma[j] * xh + beta[j];
      }
    has_cache_ = false;
  }
  check_finite(out, "batchnorm");
  return out;
}

LayerGrad BatchNormLayer::backward(const Tensor& upstream) {
  require_cache();
  if (mode_ != Mode::train) throw state_error("batchnorm backward requires train-mode forward");
  if (!upstream.same_shape(input_)) throw dimension_error("batchnorm upstream shape mismatch");
  has_cache_ = false;

  const std::size_t f = features_;
  const std::size_t rows = input_.size() / f;
  const double n = static_cast<double>(rows);
  const double* up = upstream.data();
  const double* xh = xhat_.data();

  LayerGrad g;
  g.param_grads = {Tensor({f}), Tensor({f})};
  Tensor& ggamma = g.param_grads[0];
  Tensor& gbeta = g.param_grads[1];
  std::vector<double> sum_dy(f, 0.0), sum_dy_xhat(f, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < f; ++j) {
      const std::size_t i = r * f + j;
      sum_dy[j] += up[i];
      sum_dy_xhat[j] += up[i] * xh[i];
    }
  for (std::size_t j = 0; j < f; ++j) {
    ggamma[j] = sum_dy_xhat[j];
    gbeta[j] = sum_dy[j];
  }

  // dx = (gamma / (n*sqrt(var+eps))) * (n*dy - sum(dy) - xhat * sum(dy*xhat))
  g.input_grad = Tensor(input_.shape());
  double* gx = g.input_grad.values().data();
  for (std::size_t j = 0; j < f; ++j) {
    const double inv_std = 1.0 / std::sqrt(var_[j] + eps_);
    const double scale = gamma[j] * inv_std / n;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = r * f + j;
      gx[i] = scale * (n * up[i] - sum_dy[j] - xh[i] * sum_dy_xhat[j]);
    }
  }
  check_finite(g.input_grad, "batchnorm backward");
  return g;
}

// ---- dropout ----

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
  if (rate < 0.0 || rate >= 1.0) throw config_error("dropout rate must be in [0, 1)");
}

Tensor DropoutLayer::forward(const Tensor& input, Mode mode, Rng* rng) {
  auto [out, mask] = dropout_forward(input, rate_, mode, rng);
  if (mode == Mode::train) {
    mask_ = std::move(mask);
    has_cache_ = true;
  }
  return out;
}

LayerGrad DropoutLayer::backward(const Tensor& upstream) {
  require_cache();
  has_cache_ = false;
  if (!upstream.same_shape(mask_)) throw dimension_error("dropout upstream shape mismatch");
  LayerGrad g;
  g.input_grad = Tensor(upstream.shape());
  for (std::size_t i = 0; i < upstream.size(); ++i) g.input_grad[i] = upstream[i] * mask_[i];
  return g;
}

// ---- reshape ----

ReshapeLayer::ReshapeLayer(Shape tail) : tail_(std::move(tail)) {
  if (tail_.empty()) throw config_error("reshape needs a non-empty sample shape");
}

std::unique_ptr<ReshapeLayer> ReshapeLayer::flatten(std::size_t width) {
  return std::make_unique<ReshapeLayer>(Shape{width});
}

Tensor ReshapeLayer::forward(const Tensor& input, Mode mode, Rng*) {
  if (input.rank() < 1) throw dimension_error("reshape input must have a batch axis");
  if (mode == Mode::train) {
    input_shape_ = input.shape();
    has_cache_ = true;
  }
  Shape full{input.dim(0)};
  full.insert(full.end(), tail_.begin(), tail_.end());
  return input.reshaped(full);
}

LayerGrad ReshapeLayer::backward(const Tensor& upstream) {
  require_cache();
  has_cache_ = false;
  LayerGrad g;
  g.input_grad = upstream.reshaped(input_shape_);
  return g;
}

// ---- stack ----

Tensor LayerStack::forward(const Tensor& input, Mode mode, Rng* rng) {
  Tensor x = input;
  for (auto& l : layers_) x = l->forward(x, mode, rng);
  return x;
}

Tensor LayerStack::backward(const Tensor& upstream, std::vector<Tensor>* param_grads) {
  std::vector<std::vector<Tensor>> per_layer(layers_.size());
  Tensor g = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    LayerGrad lg = layers_[i]->backward(g);
    g = std::move(lg.input_grad);
    if (param_grads) per_layer[i] = std::move(lg.param_grads);
  }
  if (param_grads) {
    param_grads->clear();
    for (auto& grads : per_layer)
      for (auto& t : grads) param_grads->push_back(std::move(t));
  }
  return g;
}

std::vector<Tensor*> LayerStack::params() {
  std::vector<Tensor*> out;
  for (auto& l : layers_)
    for (Tensor* p : l->params()) out.push_back(p);
  return out;
}

std::vector<Tensor*> LayerStack::state() {
  std::vector<Tensor*> out;
  for (auto& l : layers_)
    for (Tensor* p : l->state()) out.push_back(p);
  return out;
}

void sgd_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, double lr) {
  if (params.size() != grads.size())
    throw dimension_error("sgd_step: params/grads length mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g)) throw dimension_error("sgd_step: gradient shape mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * g[k];
    check_finite(p, "sgd_step");
  }
}

}  // namespace deepgen
