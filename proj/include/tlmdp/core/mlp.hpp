#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tlmdp/core/real_array.hpp"
#include "tlmdp/core/rng.hpp"

namespace tlmdp {

enum class Activation { kIdentity, kMish, kGelu };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

double activate(Activation act, double x);
double activate_derivative(Activation act, double x);

struct DenseLayer {
  RealArray weight;  // {out, in}
  RealArray bias;    // {out}
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weight.dim(1); }
  std::size_t out_dim() const { return weight.dim(0); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Fully connected network y = act_L(W_L ... act_1(W_1 x + b_1) ... + b_L).
// Gradients use the same type, so a gradient is an MlpParams with matching
// shapes.
class MlpParams {
 public:
  MlpParams() = default;
  explicit MlpParams(std::vector<DenseLayer> layers);

  // dims = {in, h_1, ..., h_k, out}. Hidden layers use `hidden`, the last
  // layer uses `output`. Weights ~ N(0, init_std^2), biases zero.
  static MlpParams create(const std::vector<std::size_t>& dims, Activation hidden,
                          Activation output, SeededRng& rng, double init_std = 0.02);
  // Same architecture, every parameter zero.
  static MlpParams zeros_like(const MlpParams& other);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  std::size_t input_dim() const { return layers_.front().in_dim(); }
  std::size_t output_dim() const { return layers_.back().out_dim(); }
  std::size_t parameter_count() const;

  // Flat view in layer order: weight then bias per layer.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  bool all_finite() const;
  bool same_architecture(const MlpParams& other) const;

  // this += alpha * other (shapes must match).
  void add_scaled(const MlpParams& other, double alpha);
  void scale(double alpha);

  friend bool operator==(const MlpParams&, const MlpParams&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

struct MlpBackward {
  MlpParams param_grads;
  std::vector<double> input_grad;
};

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input);

// Forward activations kept for a later backward pass.
struct MlpTape {
  std::vector<std::vector<double>> pre;   // pre-activations per layer
  std::vector<std::vector<double>> post;  // post[0] is the input, post.back() the output
  const std::vector<double>& output() const { return post.back(); }
};

MlpTape mlp_forward_tape(const MlpParams& params, std::span<const double> input);
// grads += d<upstream, output>/dparams using a recorded tape. Returns input grad.
std::vector<double> mlp_backward_tape(const MlpParams& params, const MlpTape& tape,
                                      std::span<const double> upstream, MlpParams& grads);

// Exact reverse-mode gradients of <upstream, mlp_forward(params, input)>.
MlpBackward mlp_backward(const MlpParams& params, std::span<const double> input,
                         std::span<const double> upstream);

// Accumulating variant: grads += d<upstream, f>/dparams. Returns input grad.
std::vector<double> mlp_backward_accumulate(const MlpParams& params,
                                            std::span<const double> input,
                                            std::span<const double> upstream,
                                            MlpParams& grads);

}  // namespace tlmdp
