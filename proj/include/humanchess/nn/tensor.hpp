#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace hc::nn {

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major tensor. f32 for training and inference, f64 for gradient
// check builds.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(element_count(shape), T(0));
  }

  static size_t element_count(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw ShapeMismatch("non-positive dimension");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  size_t size() const { return data.size(); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  void zero() { std::fill(data.begin(), data.end(), T(0)); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  static std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
  }
};

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* where) {
  if (!a.same_shape(b))
    throw ShapeMismatch(std::string(where) + ": " + Tensor<T>::shape_str(a.shape) + " vs " +
                        Tensor<T>::shape_str(b.shape));
}

}  // namespace hc::nn
