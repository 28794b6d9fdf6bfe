#pragma once

#include <memory>
#include <string>
#include <vector>

#include "deepgen/tensor.hpp"

namespace deepgen {

// Gradients produced by one backward call. Each param_grads entry matches the
// shape of the corresponding entry in the layer's params() list.
struct LayerGrad {
  std::vector<Tensor> param_grads;
  Tensor input_grad;
};

// A layer caches whatever its backward pass needs during a train-mode
// forward; infer-mode forwards touch no mutable state, so backward after one
// (or before any forward) is a state error.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual Tensor forward(const Tensor& input, Mode mode, Rng* rng) = 0;
  virtual LayerGrad backward(const Tensor& upstream) = 0;
  // Trainable parameters, in a stable order.
  virtual std::vector<Tensor*> params() { return {}; }
  // Non-trainable buffers that must survive save/load (running stats).
  virtual std::vector<Tensor*> state() { return {}; }

 protected:
  void require_cache() const;
  bool has_cache_ = false;
};

class DenseLayer : public Layer {
 public:
  DenseLayer(std::size_t in, std::size_t out);
  void init(Rng& rng, double stddev);
  std::string kind() const override { return "dense"; }
  Tensor forward(const Tensor& input, Mode mode, Rng* rng) override;
  LayerGrad backward(const Tensor& upstream) override;
  std::vector<Tensor*> params() override { return {&weights, &bias}; }

  Tensor weights;  // in x out
  Tensor bias;     // out

 private:
  Tensor input_;
};

class Conv2dLayer : public Layer {
 public:
  Conv2dLayer(std::size_t kernel, std::size_t in_channels, std::size_t out_channels);
  void init(Rng& rng, double stddev);
  std::string kind() const override { return "conv2d"; }
  Tensor forward(const Tensor& input, Mode mode, Rng* rng) override;
  LayerGrad backward(const Tensor& upstream) override;
  std::vector<Tensor*> params() override { return {&kernels, &bias}; }

  Tensor kernels;  // k x k x cin x cout
  Tensor bias;     // cout

 private:
  Tensor input_;
};

class UpsampleLayer : public Layer {
 public:
  UpsampleLayer(std::size_t fy, std::size_t fx);
  std::string kind() const override { return "upsample"; }
  Tensor forward(const Tensor& input, Mode mode, Rng* rng) override;
  LayerGrad backward(const Tensor& upstream) override;
  std::size_t fy() const { return fy_; }
  std::size_t fx() const { return fx_; }

 private:
  std::size_t fy_, fx_;
};

class ActivationLayer : public Layer {
 public:
  explicit ActivationLayer(Activation act, double leak = 0.2);
  std::string kind() const override;
  Tensor forward(const Tensor& input, Mode mode, Rng* rng) override;
  LayerGrad backward(const Tensor& upstream) override;

 private:
  Activation act_;
  double leak_;
  Tensor input_;
};

// Per-feature batch normalization. Features are the last axis: rank-2 input
// normalizes each column over the batch, rank-4 input normalizes each channel
// over batch and both spatial axes.
class BatchNormLayer : public Layer {
 public:
  explicit BatchNormLayer(std::size_t features, double eps = 1e-5, double momentum = 0.9);
  std::string kind() const override { return "batchnorm"; }
  Tensor forward(const Tensor& input, Mode mode, Rng* rng) override;
  LayerGrad backward(const Tensor& upstream) override;
  std::vector<Tensor*> params() override { return {&gamma, &beta}; }
  std::vector<Tensor*> state() override { return {&running_mean, &running_var}; }

  Tensor gamma, beta;
  Tensor running_mean, running_var;
  double eps() const { return eps_; }

 private:
  std::size_t features_;
  double eps_, momentum_;
  Mode mode_ = Mode::train;
  Tensor input_, xhat_;
  std::vector<double> mean_, var_;
};

class DropoutLayer : public Layer {
 public:
  explicit DropoutLayer(double rate);
  std::string kind() const override { return "dropout"; }
  Tensor forward(const Tensor& input, Mode mode, Rng* rng) override;
  LayerGrad backward(const Tensor& upstream) override;
  double rate() const { return rate_; }

 private:
  double rate_;
  Tensor mask_;
};

// Reshapes every sample to `tail` while keeping the batch axis.
class ReshapeLayer : public Layer {
 public:
  explicit ReshapeLayer(Shape tail);
  static std::unique_ptr<ReshapeLayer> flatten(std::size_t width);
  std::string kind() const override { return "reshape"; }
  Tensor forward(const Tensor& input, Mode mode, Rng* rng) override;
  LayerGrad backward(const Tensor& upstream) override;

 private:
  Shape tail_;
  Shape input_shape_;
};

// Ordered stack of layers with chained forward/backward.
class LayerStack {
 public:
  LayerStack() = default;
  LayerStack(LayerStack&&) = default;
  LayerStack& operator=(LayerStack&&) = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  Tensor forward(const Tensor& input, Mode mode, Rng* rng);

  // Backpropagates through every layer. When param_grads is non-null it is
  // filled with one gradient per entry of params(), in the same order.
  Tensor backward(const Tensor& upstream, std::vector<Tensor>* param_grads = nullptr);

  std::vector<Tensor*> params();
  std::vector<Tensor*> state();

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Plain SGD: p -= lr * g, pairwise over the two lists.
void sgd_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, double lr);

}  // namespace deepgen
