#include "tlmdp/core/mlp.hpp"

#include <cmath>
#include <numbers>

#include "tlmdp/core/errors.hpp"

namespace tlmdp {
namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_input(const MlpParams& params, std::size_t n) {
  if (params.layers().empty()) throw ConfigError("mlp: network has no layers");
  if (n != params.input_dim()) {
    throw ConfigError("mlp: input has " + std::to_string(n) + " entries, network expects " +
                      std::to_string(params.input_dim()));
  }
}

MlpTape run_forward(const MlpParams& params, std::span<const double> input) {
  check_input(params, input.size());
  MlpTape tape;
  tape.post.emplace_back(input.begin(), input.end());
  for (const DenseLayer& layer : params.layers()) {
    const std::vector<double>& h = tape.post.back();
    const std::size_t out = layer.out_dim();
    const std::size_t in = layer.in_dim();
    std::vector<double> z(out);
    const double* w = layer.weight.raw().data();
    for (std::size_t r = 0; r < out; ++r) {
      double s = layer.bias[r];
      const double* row = w + r * in;
      for (std::size_t c = 0; c < in; ++c) s += row[c] * h[c];
      z[r] = s;
    }
    std::vector<double> a(out);
    for (std::size_t r = 0; r < out; ++r) a[r] = activate(layer.activation, z[r]);
    tape.pre.push_back(std::move(z));
    tape.post.push_back(std::move(a));
  }
  return tape;
}

}  // namespace

std::string to_string(Activation act) {
  switch (act) {
    case Activation::kIdentity: return "identity";
    case Activation::kMish: return "mish";
    case Activation::kGelu: return "gelu";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "mish") return Activation::kMish;
  if (name == "gelu") return Activation::kGelu;
  throw ConfigError("unknown activation '" + name + "'");
}

double activate(Activation act, double x) {
  switch (act) {
    case Activation::kIdentity: return x;
    case Activation::kMish: return x * std::tanh(softplus(x));
    case Activation::kGelu: return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  }
  return x;
}

double activate_derivative(Activation act, double x) {
  switch (act) {
    case Activation::kIdentity: return 1.0;
    case Activation::kMish: {
      const double t = std::tanh(softplus(x));
      return t + x * (1.0 - t * t) * sigmoid(x);
    }
    case Activation::kGelu: {
      const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
      const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
      return cdf + x * pdf;
    }
  }
  return 1.0;
}

MlpParams::MlpParams(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.weight.rank() != 2 || layer.bias.rank() != 1 ||
        layer.bias.size() != layer.out_dim()) {
      throw ConfigError("mlp: layer " + std::to_string(l) + " has inconsistent shapes");
    }
    if (l > 0 && layers_[l - 1].out_dim() != layer.in_dim()) {
      throw ConfigError("mlp: layer " + std::to_string(l) + " input dim " +
                        std::to_string(layer.in_dim()) + " does not chain with previous output " +
                        std::to_string(layers_[l - 1].out_dim()));
    }
  }
}

MlpParams MlpParams::create(const std::vector<std::size_t>& dims, Activation hidden,
                            Activation output, SeededRng& rng, double init_std) {
  if (dims.size() < 2) throw ConfigError("mlp: need at least input and output dims");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] == 0 || dims[l + 1] == 0) throw ConfigError("mlp: zero-width layer");
    DenseLayer layer;
    layer.weight = RealArray({dims[l + 1], dims[l]});
    for (double& w : layer.weight.raw()) w = init_std * rng.normal();
    layer.bias = RealArray({dims[l + 1]});
    layer.activation = (l + 2 == dims.size()) ? output : hidden;
    layers.push_back(std::move(layer));
  }
  return MlpParams(std::move(layers));
}

MlpParams MlpParams::zeros_like(const MlpParams& other) {
  MlpParams out = other;
  for (DenseLayer& layer : out.layers_) {
    for (double& w : layer.weight.raw()) w = 0.0;
    for (double& b : layer.bias.raw()) b = 0.0;
  }
  return out;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const DenseLayer& layer : layers_) {
    flat.insert(flat.end(), layer.weight.raw().begin(), layer.weight.raw().end());
    flat.insert(flat.end(), layer.bias.raw().begin(), layer.bias.raw().end());
  }
  return flat;
}

void MlpParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw ConfigError("mlp: assign expects " + std::to_string(parameter_count()) +
                      " values, got " + std::to_string(flat.size()));
  }
  std::size_t k = 0;
  for (DenseLayer& layer : layers_) {
    for (double& w : layer.weight.raw()) w = flat[k++];
    for (double& b : layer.bias.raw()) b = flat[k++];
  }
}

bool MlpParams::all_finite() const {
  for (const DenseLayer& layer : layers_) {
    if (!layer.weight.all_finite() || !layer.bias.all_finite()) return false;
  }
  return true;
}

bool MlpParams::same_architecture(const MlpParams& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight.shape() != other.layers_[l].weight.shape() ||
        layers_[l].activation != other.layers_[l].activation) {
      return false;
    }
  }
  return true;
}

void MlpParams::add_scaled(const MlpParams& other, double alpha) {
  if (!same_architecture(other)) throw ConfigError("mlp: add_scaled architecture mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    axpy(alpha, other.layers_[l].weight.values(), layers_[l].weight.values());
    axpy(alpha, other.layers_[l].bias.values(), layers_[l].bias.values());
  }
}

void MlpParams::scale(double alpha) {
  for (DenseLayer& layer : layers_) {
    for (double& w : layer.weight.raw()) w *= alpha;
    for (double& b : layer.bias.raw()) b *= alpha;
  }
}

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input) {
  MlpTape tape = run_forward(params, input);
  return std::move(tape.post.back());
}

MlpTape mlp_forward_tape(const MlpParams& params, std::span<const double> input) {
  return run_forward(params, input);
}

std::vector<double> mlp_backward_accumulate(const MlpParams& params,
                                            std::span<const double> input,
                                            std::span<const double> upstream,
                                            MlpParams& grads) {
  return mlp_backward_tape(params, run_forward(params, input), upstream, grads);
}

std::vector<double> mlp_backward_tape(const MlpParams& params, const MlpTape& tape,
                                      std::span<const double> upstream, MlpParams& grads) {
  if (upstream.size() != params.output_dim()) {
    throw ConfigError("mlp: upstream has " + std::to_string(upstream.size()) +
                      " entries, network output is " + std::to_string(params.output_dim()));
  }
  if (!grads.same_architecture(params)) throw ConfigError("mlp: gradient buffer mismatch");
  if (tape.pre.size() != params.layers().size()) throw ConfigError("mlp: tape does not match network");
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t l = params.layers().size(); l-- > 0;) {
    const DenseLayer& layer = params.layers()[l];
    DenseLayer& g = grads.layers()[l];
    const std::size_t out = layer.out_dim();
    const std::size_t in = layer.in_dim();
    const std::vector<double>& z = tape.pre[l];
    const std::vector<double>& h = tape.post[l];
    for (std::size_t r = 0; r < out; ++r) delta[r] *= activate_derivative(layer.activation, z[r]);

    std::vector<double> next(in, 0.0);
    const double* w = layer.weight.raw().data();
    double* gw = g.weight.raw().data();
    for (std::size_t r = 0; r < out; ++r) {
      const double dr = delta[r];
      g.bias[r] += dr;
      if (dr == 0.0) continue;
      const double* row = w + r * in;
      double* grow = gw + r * in;
      for (std::size_t c = 0; c < in; ++c) {
        grow[c] += dr * h[c];
        next[c] += row[c] * dr;
      }
    }
    delta = std::move(next);
  }
  return delta;
}

MlpBackward mlp_backward(const MlpParams& params, std::span<const double> input,
                         std::span<const double> upstream) {
  MlpBackward out{MlpParams::zeros_like(params), {}};
  out.input_grad = mlp_backward_accumulate(params, input, upstream, out.param_grads);
  return out;
}

}  // namespace tlmdp
