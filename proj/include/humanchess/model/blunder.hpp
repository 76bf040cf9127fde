#pragma once

#include <optional>
#include <string>
#include <vector>

#include "humanchess/encode/blunder_input.hpp"
#include "humanchess/model/policy.hpp"  // EmptyStream, DivergenceDetected, metrics rows

namespace hc::model {

struct OneClassOnly : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One encoded decision for the blunder task: plane-major board (and
// optionally metadata) planes plus the binary label.
struct BlunderSample {
  std::vector<float> planes;  // plane-major, 17*64 or 22*64
  uint8_t label = 0;
};

inline BlunderSample make_blunder_sample(const pgn::MoveInstance& inst, bool with_metadata,
                                         const winprob::WinProbTable* table) {
  BlunderSample s;
  std::optional<encode::MetadataVector> meta;
  if (with_metadata) {
    encode::MetadataVector m;
    // the record format carries the mover's rating; both rating planes use
    // it (players share a bin in the curated sets)
    m.white_rating = inst.mover_rating;
    m.black_rating = inst.mover_rating;
    const bool white_moves = inst.mover() == chess::Color::White;
    m.white_time_fraction = white_moves ? inst.mover_clock_fraction : inst.opponent_clock_fraction;
    m.black_time_fraction = white_moves ? inst.opponent_clock_fraction : inst.mover_clock_fraction;
    m.cp = inst.eval_before.value_or(0);
    meta = m;
  }
  s.planes = encode::encode_blunder_input(inst.history.current(), meta, table);
  s.label = inst.blunder_label == 1 ? 1 : 0;
  return s;
}

// Residual CNN head (6 blocks / 64 channels at full scale, 8/256 for the
// deep variant) or the 1028-512-256 tanh fully connected net. Both end in a
// sigmoid scalar trained with MSE.
struct BlunderNetConfig {
  bool cnn = true;
  int blocks = 6;
  int channels = 64;
  std::vector<int> hidden{1028, 512, 256};
  bool with_metadata = false;

  int batch_size = 64;  // must be even: half positive, half negative
  uint64_t steps = 4000;
  nn::LrSchedule schedule{0.0002, 0.1, {20000, 1000000, 1300000}, 0.0, 0};
  uint64_t eval_every = 200;
  int early_stop_evals = 64;  // 0 disables early stopping

  int input_planes() const { return encode::blunder_plane_count(with_metadata); }
};

inline nn::GraphSpec build_blunder_graph(const BlunderNetConfig& cfg) {
  nn::GraphSpec g;
  const int planes = cfg.input_planes();
  if (cfg.cnn) {
    g.input("x", planes);
    g.conv("in.conv", "x", 3, planes, cfg.channels);
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
    g.flatten("head.flat", prev);
    g.dense("head.fc1", "head.flat", cfg.channels * 64, 128);
    g.relu("head.fc1r", "head.fc1");
    g.dense("head.fc2", "head.fc1r", 128, 1, /*init_scale=*/0.1);
    g.sigmoid("score", "head.fc2");
  } else {
    g.input("x", planes * 64, /*spatial=*/false);
    std::string prev = "x";
    int prev_dim = planes * 64;
    for (size_t i = 0; i < cfg.hidden.size(); ++i) {
      const std::string id = "fc" + std::to_string(i);
      g.dense(id, prev, prev_dim, cfg.hidden[i]);
      prev = g.tanh(id + "t", id);
      prev_dim = cfg.hidden[i];
    }
    g.dense("out", prev, prev_dim, 1, /*init_scale=*/0.1);
    g.sigmoid("score", "out");
  }
  g.outputs = {"score"};
  return g;
}

class BlunderModel {
 public:
  BlunderModel(nn::NetGraph<float> net, bool cnn, bool with_metadata)
      : net_(std::move(net)), cnn_(cnn), with_metadata_(with_metadata) {}

  static BlunderModel load(const std::string& path) {
    nlohmann::json meta;
    nn::NetGraph<float> net = nn::load_checkpoint<float>(path, &meta);
    return BlunderModel(std::move(net), meta.value("cnn", true), meta.value("with_metadata", false));
  }

  void save(const std::string& path, nlohmann::json extra_meta = {}) const {
    nlohmann::json meta = std::move(extra_meta);
    meta["kind"] = "blunder";
    meta["cnn"] = cnn_;
    meta["with_metadata"] = with_metadata_;
    nn::save_checkpoint(net_, path, meta);
  }

  bool with_metadata() const { return with_metadata_; }
  bool cnn() const { return cnn_; }
  nn::NetGraph<float>& net() { return net_; }
  int planes() const { return encode::blunder_plane_count(with_metadata_); }

  void fill_batch_row(nn::Tensor<float>& batch, int row, const std::vector<float>& planes) const {
    const int C = this->planes();
    if (cnn_) {
      float* out = batch.ptr() + static_cast<size_t>(row) * 64 * C;
      for (int sq = 0; sq < 64; ++sq)
        for (int c = 0; c < C; ++c) out[static_cast<size_t>(sq) * C + c] = planes[c * 64 + sq];
    } else {
      std::copy(planes.begin(), planes.end(), batch.ptr() + static_cast<size_t>(row) * C * 64);
    }
  }

  nn::Tensor<float> make_batch(int n) const {
    return cnn_ ? nn::Tensor<float>({n, 8, 8, planes()})
                : nn::Tensor<float>({n, planes() * 64});
  }

  // scores in [0,1], one per sample
  std::vector<float> score(const std::vector<BlunderSample>& samples) {
    std::vector<float> out;
    out.reserve(samples.size());
    constexpr int kChunk = 256;
    for (size_t at = 0; at < samples.size(); at += kChunk) {
      const int n = static_cast<int>(std::min<size_t>(kChunk, samples.size() - at));
      nn::Tensor<float> batch = make_batch(n);
      for (int i = 0; i < n; ++i) fill_batch_row(batch, i, samples[at + i].planes);
      net_.forward(batch, false);
      const auto& y = net_.output("score");
      for (int i = 0; i < n; ++i) out.push_back(y.data[i]);
    }
    return out;
  }

  double accuracy(const std::vector<BlunderSample>& samples) {
    if (samples.empty()) return -1;
    const auto scores = score(samples);
    size_t hits = 0;
    for (size_t i = 0; i < samples.size(); ++i)
      if ((scores[i] >= 0.5f) == (samples[i].label == 1)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(samples.size());
  }

 private:
  nn::NetGraph<float> net_;
  bool cnn_;
  bool with_metadata_;
};

struct BlunderTrainResult {
  BlunderModel model;
  std::vector<TrainMetricsRow> metrics;
  double best_val_accuracy = -1;
  uint64_t best_step = 0;
  uint64_t stopped_at = 0;
};

// Balanced batches: every batch is exactly half blunders and half
// non-blunders, cycling each pool in a seeded shuffled order. Early stopping
// keeps the checkpoint with the best validation accuracy.
inline BlunderTrainResult train_blunder(const std::vector<BlunderSample>& train,
                                        const std::vector<BlunderSample>& validation,
                                        const BlunderNetConfig& cfg, uint64_t seed) {
  if (cfg.batch_size % 2 != 0) throw std::invalid_argument("balanced batches need an even size");
  std::vector<size_t> pos, neg;
  for (size_t i = 0; i < train.size(); ++i) (train[i].label ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw OneClassOnly("need both blunders and non-blunders");

  nn::NetGraph<float> net(build_blunder_graph(cfg), seed);
  BlunderModel model(std::move(net), cfg.cnn, cfg.with_metadata);
  nn::AdamState<float> adam;
  Rng rng(seed ^ 0x77777777ULL);

  auto cycle = [&rng](std::vector<size_t>& pool, size_t& at) {
    if (at == 0) rng.shuffle(pool);
    const size_t v = pool[at];
    at = (at + 1) % pool.size();
    return v;
  };
  size_t pos_at = 0, neg_at = 0;

  const int half = cfg.batch_size / 2;
  nn::Tensor<float> batch = model.make_batch(cfg.batch_size);
  std::vector<float> labels(cfg.batch_size);

  BlunderTrainResult result{std::move(model), {}, -1, 0, 0};
  std::optional<nn::NetGraph<float>> best_net;
  int evals_since_best = 0;

  for (uint64_t step = 0; step < cfg.steps; ++step) {
    for (int i = 0; i < cfg.batch_size; ++i) {
      const bool positive = i < half;
      const size_t idx = positive ? cycle(pos, pos_at) : cycle(neg, neg_at);
      result.model.fill_batch_row(batch, i, train[idx].planes);
      labels[i] = positive ? 1.0f : 0.0f;
    }
    auto& g = result.model.net();
    g.forward(batch, true);
    auto loss = nn::mse_loss<float>(g.output("score"), labels);
    if (!std::isfinite(loss.loss))
      throw DivergenceDetected("non-finite loss at step " + std::to_string(step));
    g.zero_grads();
    std::map<std::string, nn::Tensor<float>> grads;
    grads["score"] = std::move(loss.grad);
    g.backward(grads);
    const double lr = cfg.schedule.rate_at(step);
    nn::adam_step(g, adam, static_cast<float>(lr));

    TrainMetricsRow row{step, lr, 0, loss.loss, -1};
    result.stopped_at = step + 1;
    const bool eval_now = !validation.empty() && cfg.eval_every > 0 &&
                          (step % cfg.eval_every == cfg.eval_every - 1 || step + 1 == cfg.steps);
    if (eval_now) {
      row.val_accuracy = result.model.accuracy(validation);
      if (row.val_accuracy > result.best_val_accuracy) {
        result.best_val_accuracy = row.val_accuracy;
        result.best_step = step + 1;
        best_net = result.model.net().clone();
        evals_since_best = 0;
      } else {
        ++evals_since_best;
      }
      result.metrics.push_back(row);
      if (cfg.early_stop_evals > 0 && evals_since_best >= cfg.early_stop_evals) break;
      continue;
    }
    result.metrics.push_back(row);
  }
  if (best_net) result.model.net() = std::move(*best_net);
  return result;
}

}  // namespace hc::model
