#pragma once

#include <cmath>
#include <vector>

#include "humanchess/nn/tensor.hpp"

namespace hc::nn {

// Policy logits come out of the head as [N,8,8,73]; the flat move index
// plane*64+square maps to tensor offset square*73+plane.
inline size_t policy_offset(int move_index) {
  const int plane = move_index / 64;
  const int square = move_index % 64;
  return static_cast<size_t>(square) * 73 + plane;
}

template <typename T>
struct LossResult {
  T loss = T(0);
  Tensor<T> grad;  // d loss / d input, including the 1/N batch factor
};

// Cross entropy with an internal softmax over either all 4672 move indices
// or, when masks are given, only the legal ones per sample.
template <typename T>
LossResult<T> policy_cross_entropy(const Tensor<T>& logits, const std::vector<int>& targets,
                                   const std::vector<std::vector<int>>* legal_masks = nullptr,
                                   T weight = T(1)) {
  const int N = logits.shape[0];
  if (static_cast<int>(targets.size()) != N) throw ShapeMismatch("target count != batch");
  const size_t per = logits.size() / N;

  LossResult<T> result;
  result.grad = Tensor<T>(logits.shape);
  T total = T(0);

  std::vector<int> all;
  if (!legal_masks) {
    all.resize(4672);
    for (int i = 0; i < 4672; ++i) all[i] = i;
  }

  for (int i = 0; i < N; ++i) {
    const std::vector<int>& allowed = legal_masks ? (*legal_masks)[i] : all;
    const T* row = logits.ptr() + static_cast<size_t>(i) * per;
    T* grow = result.grad.ptr() + static_cast<size_t>(i) * per;

    T mx = -std::numeric_limits<T>::infinity();
    for (int idx : allowed) mx = std::max(mx, row[policy_offset(idx)]);
    T sum = T(0);
    for (int idx : allowed) sum += std::exp(row[policy_offset(idx)] - mx);
    const T log_sum = std::log(sum) + mx;

    const T scale = weight / static_cast<T>(N);
    for (int idx : allowed) {
      const size_t off = policy_offset(idx);
      const T p = std::exp(row[off] - log_sum);
      grow[off] += scale * p;
    }
    const size_t target_off = policy_offset(targets[i]);
    grow[target_off] -= scale;
    total += log_sum - row[target_off];
  }
  result.loss = weight * total / static_cast<T>(N);
  return result;
}

// Mean squared error over a [N,1] (or [N,K]) prediction.
template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const std::vector<T>& targets, T weight = T(1)) {
  if (pred.size() != targets.size()) throw ShapeMismatch("mse target size");
  LossResult<T> result;
  result.grad = Tensor<T>(pred.shape);
  const T inv = T(1) / static_cast<T>(pred.size());
  T total = T(0);
  for (size_t i = 0; i < pred.size(); ++i) {
    const T d = pred.data[i] - targets[i];
    total += d * d;
    result.grad.data[i] = weight * T(2) * d * inv;
  }
  result.loss = weight * total * inv;
  return result;
}

}  // namespace hc::nn
