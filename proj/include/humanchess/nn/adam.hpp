#pragma once

#include <cmath>
#include <map>
#include <string>

#include "humanchess/nn/graph.hpp"

namespace hc::nn {

// Adam with bias correction. beta1 0.9, beta2 0.999, eps 1e-7.
template <typename T>
struct AdamState {
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-7);
  uint64_t step = 0;
  std::map<std::string, Tensor<T>> m, v;

  void ensure(const std::string& name, const Tensor<T>& like) {
    if (!m.count(name)) {
      m.emplace(name, Tensor<T>(like.shape));
      v.emplace(name, Tensor<T>(like.shape));
    }
  }
};

template <typename T>
void adam_step(NetGraph<T>& net, AdamState<T>& state, T lr) {
  state.step += 1;
  const T bc1 = T(1) - std::pow(state.beta1, static_cast<T>(state.step));
  const T bc2 = T(1) - std::pow(state.beta2, static_cast<T>(state.step));
  for (const std::string& name : net.param_order()) {
    Tensor<T>& p = net.param(name);
    const Tensor<T>& g = net.grad(name);
    check_same_shape(p, g, "adam");
    state.ensure(name, p);
    Tensor<T>& m = state.m.at(name);
    Tensor<T>& v = state.v.at(name);
    for (size_t i = 0; i < p.size(); ++i) {
      m.data[i] = state.beta1 * m.data[i] + (T(1) - state.beta1) * g.data[i];
      v.data[i] = state.beta2 * v.data[i] + (T(1) - state.beta2) * g.data[i] * g.data[i];
      const T mhat = m.data[i] / bc1;
      const T vhat = v.data[i] / bc2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace hc::nn
