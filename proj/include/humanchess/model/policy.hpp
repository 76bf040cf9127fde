#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "humanchess/data/shuffle.hpp"
#include "humanchess/encode/move_index.hpp"
#include "humanchess/encode/policy_input.hpp"
#include "humanchess/eval/predictor.hpp"
#include "humanchess/nn/adam.hpp"
#include "humanchess/nn/checkpoint.hpp"
#include "humanchess/nn/losses.hpp"
#include "humanchess/nn/schedule.hpp"
#include "humanchess/pgn/filter.hpp"

namespace hc::model {

struct EmptyStream : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergenceDetected : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoLegalMoves : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Residual policy/value network over 162 input planes. Full-scale settings
// are 6 blocks of 64 channels, batch 1024, 400k steps, 1/32 move sampling,
// a 250k-slot shuffle buffer, and equal policy/value loss weights; every
// knob scales down for desk-size runs.
struct PolicyNetConfig {
  int blocks = 6;
  int channels = 64;
  int policy_head_channels = 64;
  int value_head_channels = 32;
  int value_hidden = 128;

  int batch_size = 1024;
  uint64_t steps = 400000;
  double sample_probability = 1.0 / 32.0;
  size_t shuffle_capacity = 250000;
  double policy_loss_weight = 0.5;
  double value_loss_weight = 0.5;
  nn::LrSchedule schedule;  // 0.1, x0.1 at 80k/200k/360k

  bool mask_policy_loss = true;  // restrict the training softmax to legal moves
  bool include_history = true;   // zeroing history frames is the ablation
  uint64_t eval_every = 500;
  size_t max_validation_instances = 2000;
};

inline nn::GraphSpec build_policy_graph(const PolicyNetConfig& cfg) {
  nn::GraphSpec g;
  g.input("x", encode::kPolicyPlanes);
  g.conv("in.conv", "x", 3, encode::kPolicyPlanes, cfg.channels);
  g.batchnorm("in.bn", "in.conv", cfg.channels);
  std::string prev = g.relu("in.relu", "in.bn");
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string base = "b" + std::to_string(b);
    g.conv(base + ".c1", prev, 3, cfg.channels, cfg.channels);
    g.batchnorm(base + ".bn1", base + ".c1", cfg.channels);
    g.relu(base + ".r1", base + ".bn1");
    g.conv(base + ".c2", base + ".r1", 3, cfg.channels, cfg.channels);
    g.batchnorm(base + ".bn2", base + ".c2", cfg.channels);
    g.add(base + ".add", base + ".bn2", prev);
    prev = g.relu(base + ".out", base + ".add");
  }
  // policy head: 1x1 conv then a conv to 73 move planes
  g.conv("ph.conv", prev, 1, cfg.channels, cfg.policy_head_channels);
  g.batchnorm("ph.bn", "ph.conv", cfg.policy_head_channels);
  g.relu("ph.relu", "ph.bn");
  g.conv("policy", "ph.relu", 1, cfg.policy_head_channels, 73, /*init_scale=*/0.1);
  // value head: 1x1 conv, two dense layers, tanh scalar
  g.conv("vh.conv", prev, 1, cfg.channels, cfg.value_head_channels);
  g.batchnorm("vh.bn", "vh.conv", cfg.value_head_channels);
  g.relu("vh.relu", "vh.bn");
  g.flatten("vh.flat", "vh.relu");
  g.dense("vh.fc1", "vh.flat", cfg.value_head_channels * 64, cfg.value_hidden);
  g.relu("vh.fc1r", "vh.fc1");
  g.dense("vh.fc2", "vh.fc1r", cfg.value_hidden, 1, /*init_scale=*/0.1);
  g.tanh("value", "vh.fc2");
  g.outputs = {"policy", "value"};
  return g;
}

// Plane-major encoding copied into the NHWC batch tensor.
inline void fill_policy_batch_row(nn::Tensor<float>& batch, int row, const float* planes) {
  float* out = batch.ptr() + static_cast<size_t>(row) * 64 * encode::kPolicyPlanes;
  for (int sq = 0; sq < 64; ++sq)
    for (int c = 0; c < encode::kPolicyPlanes; ++c)
      out[static_cast<size_t>(sq) * encode::kPolicyPlanes + c] = planes[c * 64 + sq];
}

struct TrainMetricsRow {
  uint64_t step = 0;
  double lr = 0;
  double policy_loss = 0;
  double value_loss = 0;
  double val_accuracy = -1;  // -1 when not evaluated at this step
};

inline void write_metrics_csv(const std::vector<TrainMetricsRow>& rows, std::ostream& out) {
  out << "step,lr,policy_loss,value_loss,val_accuracy\n";
  char buf[160];
  for (const auto& r : rows) {
    if (r.val_accuracy >= 0)
      std::snprintf(buf, sizeof buf, "%llu,%.9g,%.9g,%.9g,%.9g\n",
                    static_cast<unsigned long long>(r.step), r.lr, r.policy_loss, r.value_loss,
                    r.val_accuracy);
    else
      std::snprintf(buf, sizeof buf, "%llu,%.9g,%.9g,%.9g,\n",
                    static_cast<unsigned long long>(r.step), r.lr, r.policy_loss, r.value_loss);
    out << buf;
  }
}

// Greedy legal-move prediction from raw logits; ties break toward the
// deterministic legal-move order.
inline std::pair<chess::Move, std::vector<std::pair<chess::Move, double>>> predict_from_logits(
    const float* logits_row, const chess::Position& pos) {
  const auto legal = pos.legal_moves();
  if (legal.empty()) throw NoLegalMoves("no legal moves in " + pos.to_fen());
  double mx = -1e30;
  for (const auto& m : legal)
    mx = std::max(mx, static_cast<double>(logits_row[nn::policy_offset(encode::encode_move(m, pos))]));
  double sum = 0;
  std::vector<std::pair<chess::Move, double>> dist;
  dist.reserve(legal.size());
  for (const auto& m : legal) {
    const double p =
        std::exp(static_cast<double>(logits_row[nn::policy_offset(encode::encode_move(m, pos))]) - mx);
    dist.emplace_back(m, p);
    sum += p;
  }
  chess::Move best = legal.front();
  double best_p = -1;
  for (auto& [m, p] : dist) {
    p /= sum;
    if (p > best_p) {
      best_p = p;
      best = m;
    }
  }
  return {best, std::move(dist)};
}

class PolicyModel {
 public:
  PolicyModel(nn::NetGraph<float> net, bool include_history)
      : net_(std::move(net)), include_history_(include_history) {}

  static PolicyModel load(const std::string& path) {
    nlohmann::json meta;
    nn::NetGraph<float> net = nn::load_checkpoint<float>(path, &meta);
    return PolicyModel(std::move(net), meta.value("include_history", true));
  }

  void save(const std::string& path, nlohmann::json extra_meta = {}) const {
    nlohmann::json meta = std::move(extra_meta);
    meta["kind"] = "policy";
    meta["include_history"] = include_history_;
    nn::save_checkpoint(net_, path, meta);
  }

  bool include_history() const { return include_history_; }
  nn::NetGraph<float>& net() { return net_; }
  const nn::NetGraph<float>& net() const { return net_; }

  std::pair<chess::Move, std::vector<std::pair<chess::Move, double>>> predict_move(
      const chess::PositionHistory& h) {
    nn::Tensor<float> input({1, 8, 8, encode::kPolicyPlanes});
    const auto planes = encode::encode_policy_input(h, include_history_);
    fill_policy_batch_row(input, 0, planes.data());
    net_.forward(input, false);
    return predict_from_logits(net_.output("policy").ptr(), h.current());
  }

  // mover's win estimate in [-1, 1]
  float predict_value(const chess::PositionHistory& h) {
    nn::Tensor<float> input({1, 8, 8, encode::kPolicyPlanes});
    const auto planes = encode::encode_policy_input(h, include_history_);
    fill_policy_batch_row(input, 0, planes.data());
    net_.forward(input, false);
    return net_.output("value").data[0];
  }

 private:
  nn::NetGraph<float> net_;
  bool include_history_;
};

class PolicyPredictor : public eval::Predictor {
 public:
  PolicyPredictor(PolicyModel model, std::string name)
      : model_(std::move(model)), name_(std::move(name)) {}

  chess::Move predict(const chess::PositionHistory& h) override {
    return model_.predict_move(h).first;
  }
  std::string name() const override { return name_; }
  PolicyModel& model() { return model_; }

 private:
  PolicyModel model_;
  std::string name_;
};

struct PolicyTrainResult {
  PolicyModel model;
  std::vector<TrainMetricsRow> metrics;
};

inline double validation_move_match(PolicyModel& model, const std::vector<pgn::MoveInstance>& val,
                                    size_t cap) {
  if (val.empty()) return -1;
  const size_t n = std::min(cap, val.size());
  size_t hits = 0;
  for (size_t i = 0; i < n; ++i)
    if (model.predict_move(val[i].history).first == val[i].played) ++hits;
  return static_cast<double>(hits) / static_cast<double>(n);
}

// Training loop: move sampling, shuffle buffer, batched forward/backward,
// Adam under the schedule. Bit-reproducible from (seed, config, input order).
inline PolicyTrainResult train_policy(const std::vector<pgn::MoveInstance>& train,
                                      const std::vector<pgn::MoveInstance>& validation,
                                      const PolicyNetConfig& cfg, uint64_t seed) {
  if (train.empty()) throw EmptyStream("no training instances");
  nn::NetGraph<float> net(build_policy_graph(cfg), seed);
  nn::AdamState<float> adam;
  Rng sample_rng(seed ^ 0x5a5a5a5aULL);

  // endless sampled cursor over the training set feeding the shuffle buffer
  size_t cursor = 0;
  auto source = [&]() -> std::optional<size_t> {
    for (;;) {
      const size_t idx = cursor % train.size();
      ++cursor;
      if (cfg.sample_probability >= 1.0 || sample_rng.next_double() < cfg.sample_probability)
        return idx;
    }
  };
  data::ShuffleStream<size_t> shuffled(source, cfg.shuffle_capacity, seed ^ 0xc3c3c3c3ULL);

  PolicyModel model(std::move(net), cfg.include_history);
  std::vector<TrainMetricsRow> metrics;
  std::vector<float> planes(encode::kPolicyInputSize);

  nn::Tensor<float> batch({cfg.batch_size, 8, 8, encode::kPolicyPlanes});
  std::vector<int> targets(cfg.batch_size);
  std::vector<std::vector<int>> masks(cfg.batch_size);
  std::vector<float> value_targets(cfg.batch_size);

  for (uint64_t step = 0; step < cfg.steps; ++step) {
    for (int i = 0; i < cfg.batch_size; ++i) {
      const auto idx = shuffled.next();
      const pgn::MoveInstance& inst = train[*idx];
      encode::encode_policy_input(inst.history, planes.data(), cfg.include_history);
      fill_policy_batch_row(batch, i, planes.data());
      targets[i] = encode::encode_move(inst.played, inst.history.current());
      value_targets[i] = static_cast<float>(inst.result_for_mover * 2.0 - 1.0);
      if (cfg.mask_policy_loss) {
        masks[i].clear();
        for (const auto& m : inst.history.current().legal_moves())
          masks[i].push_back(encode::encode_move(m, inst.history.current()));
      }
    }

    auto& g = model.net();
    g.forward(batch, true);
    auto policy_loss = nn::policy_cross_entropy<float>(
        g.output("policy"), targets, cfg.mask_policy_loss ? &masks : nullptr,
        static_cast<float>(cfg.policy_loss_weight));
    auto value_loss = nn::mse_loss<float>(g.output("value"), value_targets,
                                          static_cast<float>(cfg.value_loss_weight));
    if (!std::isfinite(policy_loss.loss) || !std::isfinite(value_loss.loss))
      throw DivergenceDetected("non-finite loss at step " + std::to_string(step));

    g.zero_grads();
    std::map<std::string, nn::Tensor<float>> out_grads;
    out_grads["policy"] = std::move(policy_loss.grad);
    out_grads["value"] = std::move(value_loss.grad);
    g.backward(out_grads);

    const double lr = cfg.schedule.rate_at(step);
    nn::adam_step(g, adam, static_cast<float>(lr));

    TrainMetricsRow row{step, lr, policy_loss.loss / std::max(1e-12, cfg.policy_loss_weight),
                        value_loss.loss / std::max(1e-12, cfg.value_loss_weight), -1};
    if (!validation.empty() && cfg.eval_every > 0 &&
        (step % cfg.eval_every == cfg.eval_every - 1 || step + 1 == cfg.steps))
      row.val_accuracy = validation_move_match(model, validation, cfg.max_validation_instances);
    metrics.push_back(row);
  }
  return {std::move(model), std::move(metrics)};
}

}  // namespace hc::model
