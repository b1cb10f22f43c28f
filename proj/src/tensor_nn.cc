#include "uavx/tensor_nn.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "uavx/errors.h"
#include "uavx/rng.h"

namespace uavx::nn {
namespace {

constexpr char kMagic[8] = {'U', 'A', 'V', 'X', 'N', 'E', 'T', '1'};

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "{";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "}";
}

Tensor as_matrix(const Tensor& t) {
  if (t.rank() == 2) return t;
  if (t.rank() == 1) return Tensor({1, t.size()}, std::vector<double>(t.values().begin(), t.values().end()));
  throw ShapeError("expected a rank-1 or rank-2 tensor, got " + shape_str(t.shape()));
}

// Restores the caller's rank on a {batch, n} result.
Tensor with_rank(Tensor m, std::size_t rank) {
  if (rank == 2) return m;
  const std::size_t n = m.size();
  return Tensor({n}, std::vector<double>(m.values().begin(), m.values().end()));
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

ConstMatMap view(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap(t.values().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MatMap view(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatMap(t.values().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Tensor apply_layer(const DenseLayer& layer, const Tensor& x) {
  const std::size_t batch = x.rows();
  const std::size_t in = layer.input_dim();
  const std::size_t out = layer.output_dim();
  Tensor y = Tensor::zeros({batch, out});
  auto ym = view(y, batch, out);
  ym.noalias() = view(x, batch, in) * view(layer.weights, in, out);
  ym.rowwise() += view(layer.biases, 1, out).row(0);
  if (layer.activation == Activation::kRelu) ym = ym.cwiseMax(0.0);
  return y;
}

void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_le(std::ostream& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    value = std::bit_cast<T>(bytes);
  }
  write_bytes(out, &value, sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated network file");
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    value = std::bit_cast<T>(bytes);
  }
  return value;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (product(shape_) != values_.size()) {
    throw ShapeError("shape " + shape_str(shape_) + " does not hold " +
                     std::to_string(values_.size()) + " values");
  }
  if (!all_finite()) throw NumericError("tensor contains non-finite values");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  t.values_.assign(product(shape), 0.0);
  t.shape_ = std::move(shape);
  return t;
}

Tensor Tensor::row(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("a network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.weights.rank() != 2 || layer.biases.rank() != 1 ||
        layer.biases.size() != layer.output_dim()) {
      throw ShapeError("layer " + std::to_string(l) + " has inconsistent parameter shapes");
    }
    if (l > 0 && layers_[l - 1].output_dim() != layer.input_dim()) {
      throw ShapeError("layer " + std::to_string(l) + " input does not chain with previous output");
    }
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.biases.size();
  return n;
}

bool Network::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.weights.all_finite() && l.biases.all_finite();
  });
}

Network init_network(std::span<const std::size_t> dims, std::span<const Activation> activations,
                     std::uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("init_network needs at least two layer dimensions");
  if (activations.size() != dims.size() - 1) {
    throw ConfigError("init_network needs one activation per layer");
  }
  if (std::any_of(dims.begin(), dims.end(), [](std::size_t d) { return d == 0; })) {
    throw ConfigError("layer dimensions must be positive");
  }
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l];
    const std::size_t out = dims[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(in * out);
    for (double& v : w) v = scale * (2.0 * uniform01(rng) - 1.0);
    layers.push_back({Tensor({in, out}, std::move(w)), Tensor::zeros({out}), activations[l]});
  }
  return Network(std::move(layers));
}

ForwardTrace forward_trace(const Network& net, const Tensor& input) {
  ForwardTrace trace;
  trace.input = as_matrix(input);
  if (trace.input.cols() != net.input_dim()) {
    throw ShapeError("network expects input width " + std::to_string(net.input_dim()) + ", got " +
                     std::to_string(trace.input.cols()));
  }
  trace.outputs.reserve(net.layers().size());
  for (const DenseLayer& layer : net.layers()) {
    trace.outputs.push_back(apply_layer(layer, trace.outputs.empty() ? trace.input : trace.outputs.back()));
  }
  return trace;
}

Tensor forward(const Network& net, const Tensor& input) {
  ForwardTrace trace = forward_trace(net, input);
  return with_rank(std::move(trace.outputs.back()), input.rank());
}

Gradients backward(const Network& net, const ForwardTrace& trace, const Tensor& loss_grad, bool want_input_grad) {
  Tensor delta = as_matrix(loss_grad);
  const std::size_t batch = trace.input.rows();
  if (delta.rows() != batch || delta.cols() != net.output_dim()) {
    throw ShapeError("loss gradient shape " + shape_str(loss_grad.shape()) +
                     " does not match network output");
  }
  Gradients grads;
  grads.layers.resize(net.layers().size());
  for (std::size_t l = net.layers().size(); l-- > 0;) {
    const DenseLayer& layer = net.layers()[l];
    const Tensor& x = l == 0 ? trace.input : trace.outputs[l - 1];
    const Tensor& y = trace.outputs[l];
    const std::size_t in = layer.input_dim();
    const std::size_t out = layer.output_dim();

    if (layer.activation == Activation::kRelu) {
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!(y[i] > 0.0)) delta[i] = 0.0;
      }
    }
    Tensor dw = Tensor::zeros({in, out});
    Tensor db = Tensor::zeros({out});
    const auto dm = view(std::as_const(delta), batch, out);
    view(dw, in, out).noalias() = view(x, batch, in).transpose() * dm;
    view(db, 1, out).row(0) = dm.colwise().sum();
    Tensor dx;
    if (l > 0 || want_input_grad) {
      dx = Tensor::zeros({batch, in});
      view(dx, batch, in).noalias() = dm * view(layer.weights, in, out).transpose();
    }
    grads.layers[l] = {std::move(dw), std::move(db)};
    delta = std::move(dx);
  }
  grads.input = std::move(delta);
  return grads;
}

Gradients backward(const Network& net, const Tensor& input, const Tensor& loss_grad) {
  Gradients g = backward(net, forward_trace(net, input), loss_grad);
  if (input.rank() == 1) g.input = with_rank(std::move(g.input), 1);
  return g;
}

bool Gradients::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const LayerGrad& g) {
    return g.weights.all_finite() && g.biases.all_finite();
  });
}

Loss mse_loss(const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) {
    throw ShapeError("mse_loss shapes differ: " + shape_str(prediction.shape()) + " vs " +
                     shape_str(target.shape()));
  }
  const double batch = static_cast<double>(prediction.rows());
  Loss loss;
  loss.grad = Tensor::zeros(prediction.shape());
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double diff = prediction[i] - target[i];
    loss.value += diff * diff;
    loss.grad[i] = 2.0 * diff / batch;
  }
  loss.value /= batch;
  return loss;
}

void Optimizer::step(Network& net, const Gradients& grads) {
  auto& layers = net.mutable_layers();
  if (grads.layers.size() != layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (grads.layers[l].weights.shape() != layers[l].weights.shape() ||
        grads.layers[l].biases.shape() != layers[l].biases.shape()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
    }
  }
  if (!grads.all_finite()) throw NumericError("non-finite gradient; optimizer step refused");

  const std::size_t n = net.parameter_count();
  if (config_.algo == Algorithm::kAdam && m_.size() != n) {
    if (steps_ != 0) throw ShapeError("optimizer is bound to a network of a different size");
    m_.assign(n, 0.0);
    v_.assign(n, 0.0);
  }
  ++steps_;
  const double lr = config_.lr;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));

  const double step_size = lr / c1;
  const double inv_c2 = 1.0 / c2;
  const double eps = config_.eps;
  std::size_t k = 0;
  auto update = [&](std::span<double> params, std::span<const double> g) {
    double* __restrict p = params.data();
    const double* __restrict gr = g.data();
    const std::size_t n = params.size();
    if (config_.algo == Algorithm::kSgd) {
      for (std::size_t i = 0; i < n; ++i) p[i] -= lr * gr[i];
    } else {
      double* __restrict m = m_.data() + k;
      double* __restrict v = v_.data() + k;
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * gr[i];
        v[i] = b2 * v[i] + (1.0 - b2) * gr[i] * gr[i];
        p[i] -= step_size * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
      }
    }
    k += n;
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights.values(), grads.layers[l].weights.values());
    update(layers[l].biases.values(), grads.layers[l].biases.values());
  }
}

Network clone_parameters(const Network& src) { return src; }

void save_network(const Network& net, std::ostream& out) {
  write_bytes(out, kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const DenseLayer& layer : net.layers()) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(layer.input_dim()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(layer.output_dim()));
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(layer.activation));
    for (double v : layer.weights.values()) write_le<double>(out, v);
    for (double v : layer.biases.values()) write_le<double>(out, v);
  }
  if (!out) throw IoError("failed writing network");
}

Network load_network(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a network file (bad magic)");
  }
  const auto count = read_le<std::uint32_t>(in);
  if (count == 0 || count > 1024) throw IoError("implausible layer count " + std::to_string(count));
  std::vector<DenseLayer> layers;
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::size_t rows = read_le<std::uint32_t>(in);
    const std::size_t cols = read_le<std::uint32_t>(in);
    const auto act = read_le<std::uint8_t>(in);
    if (act > 1) throw IoError("unknown activation code " + std::to_string(act));
    if (rows == 0 || cols == 0 || rows * cols > (std::size_t{1} << 28)) {
      throw IoError("implausible layer dimensions");
    }
    std::vector<double> w(rows * cols);
    for (double& v : w) v = read_le<double>(in);
    std::vector<double> b(cols);
    for (double& v : b) v = read_le<double>(in);
    layers.push_back({Tensor({rows, cols}, std::move(w)), Tensor({cols}, std::move(b)),
                      static_cast<Activation>(act)});
  }
  return Network(std::move(layers));
}

void save_network(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_network(net, out);
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return load_network(in);
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace uavx::nn
