#pragma once

// Central finite-difference oracle for the reverse-mode gradients. Runs in
// f64. Elements whose two-step finite differences disagree (non-smooth
// points, e.g. a relu kink within h of zero) are skipped and counted.

#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "humanchess/nn/graph.hpp"

namespace gradcheck {

using Net = hc::nn::NetGraph<double>;
using T64 = hc::nn::Tensor<double>;

// Returns (scalar loss, d loss / d output) for the declared outputs.
using LossFn =
    std::function<std::pair<double, std::map<std::string, T64>>(const std::map<std::string, const T64*>&)>;

struct Report {
  double max_rel_err = 0.0;
  int checked = 0;
  int skipped = 0;
  std::string worst;
};

inline double loss_of(Net& net, const T64& input, const LossFn& loss) {
  auto outs = net.forward(input, true);
  return loss(outs).first;
}

inline Report check_gradients(Net& net, T64 input, const LossFn& loss, bool check_input = true,
                              double h = 1e-5) {
  Report report;

  auto outs = net.forward(input, true);
  auto [base_loss, out_grads] = loss(outs);
  (void)base_loss;
  net.zero_grads();
  net.backward(out_grads);

  // snapshot analytic grads before finite differencing clobbers state
  std::map<std::string, T64> analytic;
  for (const auto& name : net.param_order()) analytic[name] = net.grad(name);
  T64 analytic_input;
  std::string input_id = net.spec().nodes.front().id;
  if (check_input) analytic_input = net.node_grad(input_id);

  auto fd = [&](double* slot) {
    const double saved = *slot;
    auto eval = [&](double step) {
      *slot = saved + step;
      const double l = loss_of(net, input, loss);
      *slot = saved;
      return l;
    };
    const double f1 = (eval(h) - eval(-h)) / (2 * h);
    const double f2 = (eval(h / 2) - eval(-h / 2)) / h;
    const bool smooth = std::abs(f1 - f2) <= 1e-4 * std::max(1.0, std::abs(f1));
    return std::pair<double, bool>(f2, smooth);
  };

  auto compare = [&](double a, double* slot, const std::string& what) {
    auto [n, smooth] = fd(slot);
    if (!smooth) {
      ++report.skipped;
      return;
    }
    ++report.checked;
    // the denominator floor absorbs central-difference cancellation noise
    // (~1e-9 absolute) on gradients that are exactly or nearly zero
    const double denom = std::max({std::abs(a), std::abs(n), 2e-4});
    const double rel = std::abs(a - n) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst = what + " analytic=" + std::to_string(a) + " numeric=" + std::to_string(n);
    }
  };

  for (const auto& name : net.param_order()) {
    T64& p = net.param(name);
    for (size_t i = 0; i < p.size(); ++i)
      compare(analytic.at(name).data[i], &p.data[i], name + "[" + std::to_string(i) + "]");
  }
  if (check_input) {
    for (size_t i = 0; i < input.size(); ++i)
      compare(analytic_input.data[i], &input.data[i], "input[" + std::to_string(i) + "]");
  }
  return report;
}

// Random input with values kept away from activation kinks.
inline T64 conditioned_input(std::vector<int> shape, hc::Rng& rng) {
  T64 t(std::move(shape));
  for (double& v : t.data) {
    v = rng.next_double() * 2.0 - 1.0;
    if (std::abs(v) < 0.05) v += v >= 0 ? 0.1 : -0.1;
  }
  return t;
}

// Weighted-sum readout: L = sum c_i y_i over every declared output.
inline LossFn weighted_sum_loss(uint64_t seed) {
  return [seed](const std::map<std::string, const T64*>& outs) {
    hc::Rng rng(seed);
    double total = 0.0;
    std::map<std::string, T64> grads;
    for (const auto& [id, tensor] : outs) {
      T64 g(tensor->shape);
      for (size_t i = 0; i < tensor->size(); ++i) {
        const double c = rng.next_double() * 2.0 - 1.0;
        total += c * tensor->data[i];
        g.data[i] = c;
      }
      grads[id] = std::move(g);
    }
    return std::pair<double, std::map<std::string, T64>>(total, std::move(grads));
  };
}

}  // namespace gradcheck
