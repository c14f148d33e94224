#include "tlmdp/core/real_array.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "tlmdp/core/errors.hpp"

namespace tlmdp {
namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

RealArray::RealArray(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(element_count(shape_), 0.0) {}

RealArray::RealArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw ConfigError("RealArray: data length " + std::to_string(data_.size()) +
                      " does not match shape " + shape_string());
  }
}

RealArray RealArray::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return RealArray({n}, std::move(values));
}

RealArray RealArray::filled(std::vector<std::size_t> shape, double value) {
  RealArray out(std::move(shape));
  for (double& v : out.data_) v = value;
  return out;
}

bool RealArray::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string RealArray::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> out) {
  if (x.size() != out.size()) throw ConfigError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
}

std::vector<double> concat(std::initializer_list<std::span<const double>> parts) {
  std::vector<double> out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace tlmdp
