#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace uavx::nn {

// Dense row-major array of doubles with an explicit shape.
class Tensor {
 public:
  Tensor() = default;
  // Throws ShapeError if the shape does not match, NumericError on non-finite values.
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor zeros(std::vector<std::size_t> shape);
  // 1 x n row from a flat vector.
  static Tensor row(std::span<const double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  // Rows/cols view the tensor as a matrix; rank-1 tensors are one row.
  std::size_t rows() const { return shape_.size() == 1 ? 1 : shape_[0]; }
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> row_span(std::size_t r) { return {values_.data() + r * cols(), cols()}; }
  std::span<const double> row_span(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool all_finite() const;
  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1 };

// y = act(x W + b); weights are stored input-major with shape {in, out}.
struct DenseLayer {
  Tensor weights;
  Tensor biases;  // {out}
  Activation activation = Activation::kIdentity;

  std::size_t input_dim() const { return weights.shape()[0]; }
  std::size_t output_dim() const { return weights.shape()[1]; }
};

class Network {
 public:
  Network() = default;
  // Throws ConfigError on an empty list, ShapeError if dimensions do not chain.
  explicit Network(std::vector<DenseLayer> layers);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  std::size_t input_dim() const { return layers_.front().input_dim(); }
  std::size_t output_dim() const { return layers_.back().output_dim(); }
  std::size_t parameter_count() const;
  bool all_finite() const;

 private:
  std::vector<DenseLayer> layers_;
};

// dims lists layer boundaries, e.g. {4, 8, 3} builds 4->8->3. Weights are
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
Network init_network(std::span<const std::size_t> dims, std::span<const Activation> activations,
                     std::uint64_t seed);

// Input of shape {in} or {batch, in}; output keeps the same rank.
Tensor forward(const Network& net, const Tensor& input);

// Post-activation outputs of every layer, kept for backward().
struct ForwardTrace {
  Tensor input;
  std::vector<Tensor> outputs;

  const Tensor& output() const { return outputs.back(); }
};
ForwardTrace forward_trace(const Network& net, const Tensor& input);

struct LayerGrad {
  Tensor weights;
  Tensor biases;
};

struct Gradients {
  std::vector<LayerGrad> layers;
  Tensor input;  // d loss / d input, same shape as the forward input

  bool all_finite() const;
};

// Reverse-mode gradients given d loss / d output. With `want_input_grad`
// false, Gradients::input is left empty.
Gradients backward(const Network& net, const ForwardTrace& trace, const Tensor& loss_grad,
                   bool want_input_grad = true);
Gradients backward(const Network& net, const Tensor& input, const Tensor& loss_grad);

struct Loss {
  double value = 0.0;
  Tensor grad;  // d value / d prediction
};

// Mean over rows of the squared error summed across columns.
Loss mse_loss(const Tensor& prediction, const Tensor& target);

enum class Algorithm { kSgd, kAdam };

struct OptimizerConfig {
  Algorithm algo = Algorithm::kAdam;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Owns the per-parameter Adam moments of exactly one network.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  // Throws NumericError (leaving the network untouched) on non-finite
  // gradients and ShapeError when gradients do not match the parameters.
  void step(Network& net, const Gradients& grads);

  const OptimizerConfig& config() const { return config_; }
  std::int64_t steps() const { return steps_; }

 private:
  OptimizerConfig config_;
  std::int64_t steps_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

inline void optimizer_step(Network& net, const Gradients& grads, Optimizer& optimizer) {
  optimizer.step(net, grads);
}

Network clone_parameters(const Network& src);

// Binary layout (little endian):
//   "UAVXNET1" | u32 layer_count | per layer: u32 in, u32 out, u8 activation,
//   in*out f64 weights (input-major), out f64 biases
void save_network(const Network& net, std::ostream& out);
Network load_network(std::istream& in);
void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

}  // namespace uavx::nn
