#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "humanchess/nn/adam.hpp"
#include "humanchess/nn/checkpoint.hpp"
#include "humanchess/nn/graph.hpp"
#include "humanchess/nn/losses.hpp"
#include "humanchess/nn/schedule.hpp"
#include "support/layer_cases.hpp"

using namespace hc;
using namespace hc::nn;

namespace {

Tensor<float> random_tensor(std::vector<int> shape, uint64_t seed) {
  Tensor<float> t(std::move(shape));
  Rng rng(seed);
  for (float& v : t.data) v = rng.next_float() * 2 - 1;
  return t;
}

std::filesystem::path temp_path(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("gradient check every layer and loss") {
  for (const auto& c : layer_cases::all_cases()) {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
      auto report = c.run(seed);
      CAPTURE(c.name);
      CAPTURE(seed);
      CAPTURE(report.worst);
      CHECK(report.checked > 0);
      CHECK(report.max_rel_err <= 1e-5);
      CHECK(report.skipped <= report.checked / 100 + 1);
    }
  }
}

TEST_CASE("identity conv kernel reproduces its input") {
  GraphSpec g;
  g.input("x", 3);
  g.conv("c", "x", 3, 3, 3);
  g.outputs = {"c"};
  NetGraph<float> net(g, 1);
  auto& w = net.param("c.w");
  w.zero();
  // center tap of an identity 3x3 kernel: w[o][1][1][o] = 1
  for (int o = 0; o < 3; ++o) w.data[((o * 3 + 1) * 3 + 1) * 3 + o] = 1.0f;
  net.param("c.b").zero();

  auto input = random_tensor({2, 8, 8, 3}, 5);
  net.forward(input, false);
  CHECK(net.output("c").data == input.data);
}

TEST_CASE("residual block with zeroed second conv is identity plus relu") {
  GraphSpec g;
  g.input("x", 4);
  g.conv("c1", "x", 3, 4, 4);
  g.relu("r1", "c1");
  g.conv("c2", "r1", 3, 4, 4);
  g.add("a", "c2", "x");
  g.relu("out", "a");
  g.outputs = {"out"};
  NetGraph<float> net(g, 3);
  net.param("c2.w").zero();
  net.param("c2.b").zero();

  auto input = random_tensor({2, 8, 8, 4}, 6);
  net.forward(input, false);
  const auto& out = net.output("out");
  for (size_t i = 0; i < input.size(); ++i)
    CHECK(out.data[i] == std::max(0.0f, input.data[i]));
}

TEST_CASE("softmax rows sum to one") {
  GraphSpec g;
  g.input("x", 16, false);
  g.softmax("sm", "x");
  g.outputs = {"sm"};
  NetGraph<float> net(g, 1);
  auto input = random_tensor({5, 16}, 9);
  for (float& v : input.data) v *= 10;
  net.forward(input, false);
  const auto& y = net.output("sm");
  for (int r = 0; r < 5; ++r) {
    float sum = 0;
    for (int k = 0; k < 16; ++k) sum += y.data[r * 16 + k];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("inference is deterministic and per-sample batch independent") {
  GraphSpec g;
  g.input("x", 6);
  g.conv("c1", "x", 3, 6, 8);
  g.batchnorm("b1", "c1", 8);
  g.relu("r1", "b1");
  g.flatten("f", "r1");
  g.dense("d", "f", 512, 3);
  g.outputs = {"d"};
  NetGraph<float> net(g, 11);

  auto batch2 = random_tensor({2, 8, 8, 6}, 3);
  net.forward(batch2, false);
  auto both = net.output("d");
  net.forward(batch2, false);
  CHECK(net.output("d").data == both.data);

  // second sample alone gives the same row
  Tensor<float> single({1, 8, 8, 6});
  std::copy(batch2.data.begin() + 8 * 8 * 6, batch2.data.end(), single.data.begin());
  net.forward(single, false);
  for (int k = 0; k < 3; ++k)
    CHECK(net.output("d").data[k] == doctest::Approx(both.data[3 + k]).epsilon(1e-6));
}

TEST_CASE("batchnorm running stats converge under repeated identical batches") {
  GraphSpec g;
  g.input("x", 4);
  g.batchnorm("bn", "x", 4);
  g.outputs = {"bn"};
  NetGraph<float> net(g, 2);
  auto input = random_tensor({4, 8, 8, 4}, 8);
  for (int i = 0; i < 600; ++i) net.forward(input, true);

  // expected batch stats of channel 0
  double mean = 0, var = 0;
  const size_t M = 4 * 64;
  for (size_t r = 0; r < M; ++r) mean += input.data[r * 4];
  mean /= M;
  for (size_t r = 0; r < M; ++r) var += (input.data[r * 4] - mean) * (input.data[r * 4] - mean);
  var /= M;
  CHECK(net.buffer("bn.rmean").data[0] == doctest::Approx(mean).epsilon(1e-3));
  CHECK(net.buffer("bn.rvar").data[0] == doctest::Approx(var).epsilon(1e-2));
}

TEST_CASE("backward without a training forward is rejected") {
  GraphSpec g;
  g.input("x", 2);
  g.conv("c", "x", 1, 2, 2);
  g.outputs = {"c"};
  NetGraph<float> net(g, 1);
  std::map<std::string, Tensor<float>> grads;
  grads["c"] = Tensor<float>({1, 8, 8, 2});
  CHECK_THROWS_AS(net.backward(grads), GraphStateError);
  auto input = random_tensor({1, 8, 8, 2}, 1);
  net.forward(input, false);  // inference mode is not enough
  CHECK_THROWS_AS(net.backward(grads), GraphStateError);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  GraphSpec g;
  g.input("x", 3);
  g.conv("c", "x", 3, 3, 4);
  g.batchnorm("bn", "c", 4);
  g.tanh("t", "bn");
  g.outputs = {"t"};
  NetGraph<float> net(g, 4);
  auto input = random_tensor({2, 8, 8, 3}, 4);
  net.forward(input, true);
  net.zero_grads();
  std::map<std::string, Tensor<float>> grads;
  grads["t"] = Tensor<float>({2, 8, 8, 4});
  net.backward(grads);
  for (const auto& name : net.param_order())
    for (float v : net.grad(name).data) CHECK(v == 0.0f);
}

TEST_CASE("MSE gradient vanishes at prediction == target") {
  Tensor<float> pred({3, 1});
  pred.data = {0.3f, -0.7f, 0.1f};
  auto r = mse_loss<float>(pred, {0.3f, -0.7f, 0.1f});
  CHECK(r.loss == 0.0f);
  for (float v : r.grad.data) CHECK(v == 0.0f);
}

TEST_CASE("policy cross entropy at uniform logits is ln(4672)") {
  Tensor<float> logits({2, 8, 8, 73});
  auto r = policy_cross_entropy<float>(logits, {100, 4000});
  CHECK(r.loss == doctest::Approx(std::log(4672.0)).epsilon(1e-6));
}

TEST_CASE("adam first step moves weights by about lr") {
  GraphSpec g;
  g.input("x", 4, false);
  g.dense("d", "x", 4, 2);
  g.outputs = {"d"};
  NetGraph<float> net(g, 7);
  auto before = net.param("d.w");
  AdamState<float> state;
  // plant a constant gradient much larger than eps
  for (float& v : net.grad("d.w").data) v = 0.5f;
  for (float& v : net.grad("d.b").data) v = -0.5f;
  adam_step(net, state, 0.01f);
  for (size_t i = 0; i < before.size(); ++i) {
    const float delta = before.data[i] - net.param("d.w").data[i];
    CHECK(std::abs(delta - 0.01f) / 0.01f < 1e-3);
  }
  // bias gradient is negative, so the step is +lr
  for (float v : net.param("d.b").data) CHECK(std::abs(v - 0.01f) / 0.01f < 1e-3);
}

TEST_CASE("adam with zero gradients leaves parameters unchanged") {
  GraphSpec g;
  g.input("x", 4, false);
  g.dense("d", "x", 4, 2);
  g.outputs = {"d"};
  NetGraph<float> net(g, 7);
  auto before = net.param("d.w").data;
  AdamState<float> state;
  for (int i = 0; i < 10; ++i) adam_step(net, state, 0.1f);
  CHECK(net.param("d.w").data == before);
}

TEST_CASE("adam minimizes a scalar quadratic") {
  // f(w) = (w-3)^2 from w=0, lr 0.01
  double w = 0.0;
  AdamState<double> state;
  GraphSpec g;
  g.input("x", 1, false);
  g.dense("d", "x", 1, 1);
  g.outputs = {"d"};
  NetGraph<double> net(g, 1);
  net.param("d.w").data[0] = w;
  int steps = 0;
  for (; steps < 5000; ++steps) {
    net.grad("d.w").data[0] = 2.0 * (net.param("d.w").data[0] - 3.0);
    net.grad("d.b").zero();
    adam_step(net, state, 0.01);
    if (std::abs(net.param("d.w").data[0] - 3.0) < 1e-3) break;
  }
  CHECK(steps < 5000);
}

TEST_CASE("learning rate schedule") {
  LrSchedule s;  // defaults: 0.1, factor 0.1, drops at 80k/200k/360k
  CHECK(s.rate_at(0) == doctest::Approx(0.1));
  CHECK(s.rate_at(79999) == doctest::Approx(0.1));
  CHECK(s.rate_at(100000) == doctest::Approx(0.01));
  CHECK(s.rate_at(250000) == doctest::Approx(0.001));
  CHECK(s.rate_at(400000) == doctest::Approx(0.0001));

  LrSchedule constant{0.05, 1.0, {10, 20}, 0.0, 0};
  CHECK(constant.rate_at(1000000) == doctest::Approx(0.05));

  LrSchedule burn{0.01, 0.1, {200000}, 0.1, 10000};
  CHECK(burn.rate_at(0) == doctest::Approx(0.1));
  CHECK(burn.rate_at(9999) == doctest::Approx(0.1));
  CHECK(burn.rate_at(10000) == doctest::Approx(0.01));
  CHECK(burn.rate_at(200000) == doctest::Approx(0.001));
}

TEST_CASE("checkpoint round trip is bit exact") {
  GraphSpec g;
  g.input("x", 5);
  g.conv("c1", "x", 3, 5, 6);
  g.batchnorm("bn", "c1", 6);
  g.relu("r", "bn");
  g.flatten("f", "r");
  g.dense("d", "f", 384, 2);
  g.outputs = {"d"};
  NetGraph<float> net(g, 21);

  // touch running stats so buffers are nontrivial
  auto input = random_tensor({2, 8, 8, 5}, 2);
  net.forward(input, true);

  const auto p1 = temp_path("hc_ckpt_a.bin");
  const auto p2 = temp_path("hc_ckpt_b.bin");
  nlohmann::json meta{{"kind", "test"}, {"planes", 5}};
  save_checkpoint(net, p1.string(), meta);

  nlohmann::json meta_back;
  NetGraph<float> loaded = load_checkpoint<float>(p1.string(), &meta_back);
  CHECK(meta_back == meta);
  save_checkpoint(loaded, p2.string(), meta_back);

  std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {});
  std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);

  // forward outputs are bit identical after reload
  net.forward(input, false);
  loaded.forward(input, false);
  CHECK(net.output("d").data == loaded.output("d").data);

  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("corrupt and mismatched checkpoints are rejected") {
  GraphSpec g;
  g.input("x", 2);
  g.conv("c", "x", 1, 2, 2);
  g.outputs = {"c"};
  NetGraph<float> net(g, 1);
  const auto p = temp_path("hc_ckpt_corrupt.bin");
  save_checkpoint(net, p.string());

  // truncation
  {
    std::ifstream in(p, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(all.data(), static_cast<std::streamsize>(all.size() / 2));
  }
  CHECK_THROWS_AS(load_checkpoint<float>(p.string()), CorruptCheckpoint);

  // flipped magic
  save_checkpoint(net, p.string());
  {
    std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(0);
    f.put('X');
  }
  CHECK_THROWS_AS(load_checkpoint<float>(p.string()), CorruptCheckpoint);

  // wrong version
  save_checkpoint(net, p.string());
  {
    std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(5);
    uint32_t v = 99;
    f.write(reinterpret_cast<const char*>(&v), 4);
  }
  CHECK_THROWS_AS(load_checkpoint<float>(p.string()), VersionMismatch);

  // missing file
  CHECK_THROWS_AS(load_checkpoint<float>("/nonexistent/nope.bin"), IoFailure);
  std::filesystem::remove(p);
}
