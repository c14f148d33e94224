#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tlmdp {

// Dense row-major array of doubles. Vectors have rank 1, weight matrices
// rank 2 with shape {rows, cols}.
class RealArray {
 public:
  RealArray() = default;
  explicit RealArray(std::vector<std::size_t> shape);
  RealArray(std::vector<std::size_t> shape, std::vector<double> data);

  static RealArray zeros(std::vector<std::size_t> shape) { return RealArray(std::move(shape)); }
  static RealArray vector(std::vector<double> values);
  static RealArray vector(std::initializer_list<double> values) {
    return vector(std::vector<double>(values));
  }
  static RealArray filled(std::vector<std::size_t> shape, double value);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-2 element access.
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const RealArray&, const RealArray&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Small vector helpers over spans.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
// out += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> out);
std::vector<double> concat(std::initializer_list<std::span<const double>> parts);

}  // namespace tlmdp
