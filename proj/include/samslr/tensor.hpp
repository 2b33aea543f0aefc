#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace samslr {

/// Dense row-major double tensor, up to 4 dimensions.
/// All network math runs in double so finite-difference checks are meaningful.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    v_.assign(static_cast<size_t>(count(shape_)), 0.0);
  }
  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), v_(std::move(data)) {
    if (static_cast<long long>(v_.size()) != count(shape_))
      throw std::invalid_argument("tensor: data size does not match shape");
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double x) {
    Tensor t(std::move(shape));
    for (double& e : t.v_) e = x;
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  double& operator[](size_t i) { return v_[i]; }
  double operator[](size_t i) const { return v_[i]; }

  double& at2(int i, int j) { return v_[idx2(i, j)]; }
  double at2(int i, int j) const { return v_[idx2(i, j)]; }
  double& at3(int i, int j, int k) { return v_[idx3(i, j, k)]; }
  double at3(int i, int j, int k) const { return v_[idx3(i, j, k)]; }
  double& at4(int i, int j, int k, int l) { return v_[idx4(i, j, k, l)]; }
  double at4(int i, int j, int k, int l) const { return v_[idx4(i, j, k, l)]; }

  size_t idx2(int i, int j) const {
    assert(shape_.size() == 2);
    return static_cast<size_t>(i) * shape_[1] + j;
  }
  size_t idx3(int i, int j, int k) const {
    assert(shape_.size() == 3);
    return (static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k;
  }
  size_t idx4(int i, int j, int k, int l) const {
    assert(shape_.size() == 4);
    return ((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l;
  }

  /// Reinterpret with a new shape of identical element count.
  Tensor reshaped(std::vector<int> shape) const {
    if (count(shape) != static_cast<long long>(v_.size()))
      throw std::invalid_argument("tensor: reshape changes element count");
    Tensor t;
    t.shape_ = std::move(shape);
    t.v_ = v_;
    return t;
  }

  void fill(double x) {
    for (double& e : v_) e = x;
  }

  void add_scaled(const Tensor& other, double a) {
    assert(other.size() == size());
    for (size_t i = 0; i < v_.size(); ++i) v_[i] += a * other.v_[i];
  }

  void scale(double a) {
    for (double& e : v_) e *= a;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  static long long count(const std::vector<int>& shape) {
    long long n = 1;
    for (int d : shape) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape_.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape_[i]);
    return s + ")";
  }

 private:
  std::vector<int> shape_;
  std::vector<double> v_;
};

}  // namespace samslr
