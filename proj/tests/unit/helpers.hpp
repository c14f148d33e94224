#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tlmdp/core/mlp.hpp"

namespace testing {

inline std::string toy_dataset() { return std::string(TLMDP_DATA_DIR) + "/toy_rhetoric.jsonl"; }

// Reference activations written out longhand.
inline double ref_mish(double x) { return x * std::tanh(std::log1p(std::exp(x))); }

// Plain nested-loop forward pass used as an oracle for the library MLP.
inline std::vector<double> ref_forward(const tlmdp::MlpParams& p, std::vector<double> x) {
  for (const auto& layer : p.layers()) {
    std::vector<double> y(layer.out_dim());
    for (std::size_t r = 0; r < layer.out_dim(); ++r) {
      double s = layer.bias[r];
      for (std::size_t c = 0; c < layer.in_dim(); ++c) s += layer.weight.at(r, c) * x[c];
      switch (layer.activation) {
        case tlmdp::Activation::kIdentity: y[r] = s; break;
        case tlmdp::Activation::kMish: y[r] = ref_mish(s); break;
        case tlmdp::Activation::kGelu: y[r] = 0.5 * s * (1.0 + std::erf(s / std::sqrt(2.0))); break;
      }
    }
    x = std::move(y);
  }
  return x;
}

inline tlmdp::DenseLayer layer(std::size_t out, std::size_t in, std::vector<double> w,
                               std::vector<double> b, tlmdp::Activation act) {
  tlmdp::DenseLayer l;
  l.weight = tlmdp::RealArray({out, in}, std::move(w));
  l.bias = tlmdp::RealArray({out}, std::move(b));
  l.activation = act;
  return l;
}

}  // namespace testing
