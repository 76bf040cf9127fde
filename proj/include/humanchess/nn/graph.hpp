#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "humanchess/nn/tensor.hpp"
#include "humanchess/util/rng.hpp"

namespace hc::nn {

struct GraphStateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class OpKind : uint8_t {
  Input,      // placeholder; spatial [N,8,8,C] or flat [N,D]
  Conv,       // 3x3 or 1x1, zero padded, stride 1, NHWC
  BatchNorm,  // per channel, running stats for inference
  Relu,
  Tanh,
  Sigmoid,
  Add,      // two inputs, elementwise
  Dense,    // fully connected on [N,D]
  Flatten,  // [N,8,8,C] -> [N, 64*C]
  Softmax,  // over the last axis
};

inline const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::Input: return "input";
    case OpKind::Conv: return "conv";
    case OpKind::BatchNorm: return "batchnorm";
    case OpKind::Relu: return "relu";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Add: return "add";
    case OpKind::Dense: return "dense";
    case OpKind::Flatten: return "flatten";
    case OpKind::Softmax: return "softmax";
  }
  return "?";
}

inline OpKind op_from_name(const std::string& s) {
  for (OpKind k : {OpKind::Input, OpKind::Conv, OpKind::BatchNorm, OpKind::Relu, OpKind::Tanh,
                   OpKind::Sigmoid, OpKind::Add, OpKind::Dense, OpKind::Flatten, OpKind::Softmax})
    if (s == op_name(k)) return k;
  throw std::runtime_error("unknown op kind: " + s);
}

struct NodeSpec {
  std::string id;
  OpKind kind = OpKind::Input;
  std::vector<std::string> inputs;
  int kernel = 0;    // conv: 1 or 3
  int in_ch = 0;     // conv/dense input width, input nodes: channel/dim count
  int out_ch = 0;    // conv/dense output width
  bool spatial = true;     // input nodes only
  double init_scale = 1.0;  // He-normal multiplier; heads use 0.1
};

// Architecture description; serialized into checkpoints so a graph can be
// rebuilt from the file alone.
struct GraphSpec {
  std::vector<NodeSpec> nodes;  // topological order
  std::vector<std::string> outputs;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : nodes) {
      nlohmann::json jn{{"id", n.id}, {"kind", op_name(n.kind)}, {"inputs", n.inputs}};
      if (n.kind == OpKind::Conv) {
        jn["kernel"] = n.kernel;
        jn["in"] = n.in_ch;
        jn["out"] = n.out_ch;
        if (n.init_scale != 1.0) jn["init_scale"] = n.init_scale;
      } else if (n.kind == OpKind::Dense) {
        jn["in"] = n.in_ch;
        jn["out"] = n.out_ch;
        if (n.init_scale != 1.0) jn["init_scale"] = n.init_scale;
      } else if (n.kind == OpKind::BatchNorm) {
        jn["in"] = n.in_ch;
      } else if (n.kind == OpKind::Input) {
        jn["in"] = n.in_ch;
        jn["spatial"] = n.spatial;
      }
      j["nodes"].push_back(jn);
    }
    j["outputs"] = outputs;
    return j;
  }

  static GraphSpec from_json(const nlohmann::json& j) {
    GraphSpec g;
    for (const auto& jn : j.at("nodes")) {
      NodeSpec n;
      n.id = jn.at("id").get<std::string>();
      n.kind = op_from_name(jn.at("kind").get<std::string>());
      n.inputs = jn.at("inputs").get<std::vector<std::string>>();
      n.kernel = jn.value("kernel", 0);
      n.in_ch = jn.value("in", 0);
      n.out_ch = jn.value("out", 0);
      n.spatial = jn.value("spatial", true);
      n.init_scale = jn.value("init_scale", 1.0);
      g.nodes.push_back(n);
    }
    g.outputs = j.at("outputs").get<std::vector<std::string>>();
    return g;
  }

  // fluent builders
  std::string input(const std::string& id, int channels, bool spatial = true) {
    nodes.push_back({id, OpKind::Input, {}, 0, channels, 0, spatial});
    return id;
  }
  std::string conv(const std::string& id, const std::string& in, int kernel, int in_ch, int out_ch,
                   double init_scale = 1.0) {
    nodes.push_back({id, OpKind::Conv, {in}, kernel, in_ch, out_ch, true, init_scale});
    return id;
  }
  std::string batchnorm(const std::string& id, const std::string& in, int channels) {
    nodes.push_back({id, OpKind::BatchNorm, {in}, 0, channels, 0, true});
    return id;
  }
  std::string relu(const std::string& id, const std::string& in) {
    nodes.push_back({id, OpKind::Relu, {in}});
    return id;
  }
  std::string tanh(const std::string& id, const std::string& in) {
    nodes.push_back({id, OpKind::Tanh, {in}});
    return id;
  }
  std::string sigmoid(const std::string& id, const std::string& in) {
    nodes.push_back({id, OpKind::Sigmoid, {in}});
    return id;
  }
  std::string add(const std::string& id, const std::string& a, const std::string& b) {
    nodes.push_back({id, OpKind::Add, {a, b}});
    return id;
  }
  std::string dense(const std::string& id, const std::string& in, int in_dim, int out_dim,
                    double init_scale = 1.0) {
    nodes.push_back({id, OpKind::Dense, {in}, 0, in_dim, out_dim, false, init_scale});
    return id;
  }
  std::string flatten(const std::string& id, const std::string& in) {
    nodes.push_back({id, OpKind::Flatten, {in}});
    return id;
  }
  std::string softmax(const std::string& id, const std::string& in) {
    nodes.push_back({id, OpKind::Softmax, {in}});
    return id;
  }
};

// Executable graph with parameters, activations, and reverse-mode gradients.
// One owner at a time; clone() for concurrent inference.
template <typename T>
class NetGraph {
 public:
  static constexpr T kBnEps = T(1e-5);
  static constexpr T kBnMomentum = T(0.99);

  NetGraph() = default;

  explicit NetGraph(GraphSpec spec, uint64_t init_seed = 1) : spec_(std::move(spec)) {
    build();
    init_params(init_seed);
  }

  const GraphSpec& spec() const { return spec_; }
  const std::vector<std::string>& param_order() const { return param_order_; }
  const std::vector<std::string>& buffer_order() const { return buffer_order_; }

  Tensor<T>& param(const std::string& name) { return params_.at(name); }
  const Tensor<T>& param(const std::string& name) const { return params_.at(name); }
  Tensor<T>& grad(const std::string& name) { return grads_.at(name); }
  Tensor<T>& buffer(const std::string& name) { return buffers_.at(name); }
  const Tensor<T>& buffer(const std::string& name) const { return buffers_.at(name); }
  bool has_param(const std::string& name) const { return params_.count(name) > 0; }
  bool has_buffer(const std::string& name) const { return buffers_.count(name) > 0; }

  void zero_grads() {
    for (auto& [name, g] : grads_) g.zero();
  }

  // Runs the graph on one input tensor (there is exactly one input node).
  // Returns activations of the declared outputs.
  std::map<std::string, const Tensor<T>*> forward(const Tensor<T>& input, bool training) {
    training_ = training;
    forward_ran_ = true;
    for (auto& n : nodes_) {
      switch (ns(n).kind) {
        case OpKind::Input: forward_input(n, input); break;
        case OpKind::Conv: forward_conv(n); break;
        case OpKind::BatchNorm: forward_batchnorm(n); break;
        case OpKind::Relu: forward_relu(n); break;
        case OpKind::Tanh: forward_tanh(n); break;
        case OpKind::Sigmoid: forward_sigmoid(n); break;
        case OpKind::Add: forward_add(n); break;
        case OpKind::Dense: forward_dense(n); break;
        case OpKind::Flatten: forward_flatten(n); break;
        case OpKind::Softmax: forward_softmax(n); break;
      }
    }
    std::map<std::string, const Tensor<T>*> out;
    for (const auto& id : spec_.outputs) out[id] = &node(id).value;
    return out;
  }

  const Tensor<T>& output(const std::string& id) const { return node(id).value; }

  // d loss / d activation of a node, valid after backward(); the entry for
  // the input node is the input gradient.
  const Tensor<T>& node_grad(const std::string& id) const { return node(id).grad; }

  // Accumulates parameter gradients from per-output loss gradients. Must
  // follow a forward(training=true) pass over the same batch.
  void backward(const std::map<std::string, Tensor<T>>& out_grads) {
    if (!forward_ran_ || !training_)
      throw GraphStateError("backward requires a training-mode forward pass");
    for (auto& n : nodes_) {
      n.grad.shape = n.value.shape;
      n.grad.data.assign(n.value.size(), T(0));
    }
    for (const auto& [id, g] : out_grads) {
      Node& n = node(id);
      check_same_shape(g, n.value, "output grad");
      n.grad = g;
    }
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node& n = *it;
      switch (ns(n).kind) {
        case OpKind::Input: break;
        case OpKind::Conv: backward_conv(n); break;
        case OpKind::BatchNorm: backward_batchnorm(n); break;
        case OpKind::Relu: backward_relu(n); break;
        case OpKind::Tanh: backward_tanh(n); break;
        case OpKind::Sigmoid: backward_sigmoid(n); break;
        case OpKind::Add: backward_add(n); break;
        case OpKind::Dense: backward_dense(n); break;
        case OpKind::Flatten: backward_flatten(n); break;
        case OpKind::Softmax: backward_softmax(n); break;
      }
    }
  }

  NetGraph clone() const { return *this; }

 private:
  struct Node {
    int spec_idx = -1;
    std::vector<int> input_idx;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> stash;  // bn: normalized input; activations: saved output
    std::vector<T> bn_invstd, bn_mean;
  };

  void build() {
    std::map<std::string, int> index;
    for (const auto& ns : spec_.nodes) {
      if (index.count(ns.id)) throw std::runtime_error("duplicate node id " + ns.id);
      Node n;
      n.spec_idx = static_cast<int>(nodes_.size());
      for (const auto& in : ns.inputs) {
        auto it = index.find(in);
        if (it == index.end()) throw std::runtime_error("node " + ns.id + " uses unknown " + in);
        n.input_idx.push_back(it->second);
      }
      index[ns.id] = static_cast<int>(nodes_.size());
      nodes_.push_back(std::move(n));
      node_index_[ns.id] = static_cast<int>(nodes_.size()) - 1;

      if (ns.kind == OpKind::Conv) {
        add_param(ns.id + ".w", {ns.out_ch, ns.kernel, ns.kernel, ns.in_ch});
        add_param(ns.id + ".b", {ns.out_ch});
      } else if (ns.kind == OpKind::Dense) {
        add_param(ns.id + ".w", {ns.out_ch, ns.in_ch});
        add_param(ns.id + ".b", {ns.out_ch});
      } else if (ns.kind == OpKind::BatchNorm) {
        add_param(ns.id + ".gamma", {ns.in_ch});
        add_param(ns.id + ".beta", {ns.in_ch});
        add_buffer(ns.id + ".rmean", {ns.in_ch});
        add_buffer(ns.id + ".rvar", {ns.in_ch});
      }
    }
    for (const auto& out : spec_.outputs)
      if (!node_index_.count(out)) throw std::runtime_error("unknown output " + out);
  }

  void init_params(uint64_t seed) {
    Rng rng(seed);
    for (const auto& name : param_order_) {
      Tensor<T>& t = params_.at(name);
      const bool is_weight = name.size() > 2 && name.substr(name.size() - 2) == ".w";
      const bool is_gamma = name.size() > 6 && name.substr(name.size() - 6) == ".gamma";
      if (is_weight) {
        const std::string owner = name.substr(0, name.size() - 2);
        double scale = 1.0;
        for (const auto& nspec : spec_.nodes)
          if (nspec.id == owner) {
            scale = nspec.init_scale;
            break;
          }
        // He normal over fan-in
        size_t fan_in = 1;
        for (size_t i = 1; i < t.shape.size(); ++i) fan_in *= t.shape[i];
        const T std = static_cast<T>(scale) * std::sqrt(T(2) / static_cast<T>(fan_in));
        for (T& v : t.data) v = static_cast<T>(rng.next_gauss()) * std;
      } else if (is_gamma) {
        std::fill(t.data.begin(), t.data.end(), T(1));
      }  // biases and beta stay zero
    }
    for (const auto& name : buffer_order_) {
      if (name.size() > 5 && name.substr(name.size() - 5) == ".rvar")
        std::fill(buffers_.at(name).data.begin(), buffers_.at(name).data.end(), T(1));
    }
  }

  void add_param(const std::string& name, std::vector<int> shape) {
    params_.emplace(name, Tensor<T>(shape));
    grads_.emplace(name, Tensor<T>(shape));
    param_order_.push_back(name);
  }

  void add_buffer(const std::string& name, std::vector<int> shape) {
    buffers_.emplace(name, Tensor<T>(shape));
    buffer_order_.push_back(name);
  }

  Node& node(const std::string& id) { return nodes_[node_index_.at(id)]; }
  const Node& node(const std::string& id) const { return nodes_[node_index_.at(id)]; }
  Node& in0(Node& n) { return nodes_[n.input_idx[0]]; }
  Node& in1(Node& n) { return nodes_[n.input_idx[1]]; }
  const NodeSpec& ns(const Node& n) const { return spec_.nodes[n.spec_idx]; }

  // --- ops -------------------------------------------------------------

  void forward_input(Node& n, const Tensor<T>& input) {
    const auto& s = input.shape;
    if (ns(n).spatial) {
      if (s.size() != 4 || s[1] != 8 || s[2] != 8 || s[3] != ns(n).in_ch)
        throw ShapeMismatch("input node " + ns(n).id + " wants [N,8,8," +
                            std::to_string(ns(n).in_ch) + "], got " +
                            Tensor<T>::shape_str(s));
    } else if (s.size() != 2 || s[1] != ns(n).in_ch) {
      throw ShapeMismatch("input node " + ns(n).id + " wants [N," +
                          std::to_string(ns(n).in_ch) + "], got " + Tensor<T>::shape_str(s));
    }
    n.value = input;
  }

  void forward_conv(Node& n) {
    const Tensor<T>& x = in0(n).value;
    const int N = x.shape[0], C = ns(n).in_ch, O = ns(n).out_ch, K = ns(n).kernel;
    if (x.shape[3] != C) throw ShapeMismatch("conv " + ns(n).id + " channel mismatch");
    const int pad = (K - 1) / 2;
    const Tensor<T>& w = params_.at(ns(n).id + ".w");
    const Tensor<T>& b = params_.at(ns(n).id + ".b");

    // repack weights to [ky][kx][ci][co] so the inner loop is a pure axpy
    wpack_.assign(static_cast<size_t>(K) * K * C * O, T(0));
    for (int o = 0; o < O; ++o)
      for (int ky = 0; ky < K; ++ky)
        for (int kx = 0; kx < K; ++kx)
          for (int c = 0; c < C; ++c)
            wpack_[((static_cast<size_t>(ky) * K + kx) * C + c) * O + o] =
                w.data[((static_cast<size_t>(o) * K + ky) * K + kx) * C + c];

    n.value = Tensor<T>({N, 8, 8, O});
    T* out = n.value.ptr();
    const T* in = x.ptr();
    for (int i = 0; i < N; ++i) {
      for (int y = 0; y < 8; ++y) {
        for (int xq = 0; xq < 8; ++xq) {
          T* orow = out + ((static_cast<size_t>(i) * 8 + y) * 8 + xq) * O;
          for (int o = 0; o < O; ++o) orow[o] = b.data[o];
          for (int ky = 0; ky < K; ++ky) {
            const int iy = y + ky - pad;
            if (iy < 0 || iy > 7) continue;
            for (int kx = 0; kx < K; ++kx) {
              const int ix = xq + kx - pad;
              if (ix < 0 || ix > 7) continue;
              const T* irow = in + ((static_cast<size_t>(i) * 8 + iy) * 8 + ix) * C;
              const T* wrow = wpack_.data() + (static_cast<size_t>(ky) * K + kx) * C * O;
              for (int c = 0; c < C; ++c) {
                const T a = irow[c];
                if (a == T(0)) continue;
                const T* wv = wrow + static_cast<size_t>(c) * O;
                for (int o = 0; o < O; ++o) orow[o] += a * wv[o];
              }
            }
          }
        }
      }
    }
  }

  void backward_conv(Node& n) {
    const Tensor<T>& x = in0(n).value;
    Tensor<T>& dx = in0(n).grad;
    const int N = x.shape[0], C = ns(n).in_ch, O = ns(n).out_ch, K = ns(n).kernel;
    const int pad = (K - 1) / 2;
    const Tensor<T>& w = params_.at(ns(n).id + ".w");
    Tensor<T>& dw = grads_.at(ns(n).id + ".w");
    Tensor<T>& db = grads_.at(ns(n).id + ".b");
    const T* g = n.grad.ptr();
    const T* in = x.ptr();

    for (int i = 0; i < N; ++i) {
      for (int y = 0; y < 8; ++y) {
        for (int xq = 0; xq < 8; ++xq) {
          const T* grow = g + ((static_cast<size_t>(i) * 8 + y) * 8 + xq) * O;
          for (int o = 0; o < O; ++o) db.data[o] += grow[o];
          for (int o = 0; o < O; ++o) {
            const T go = grow[o];
            if (go == T(0)) continue;
            for (int ky = 0; ky < K; ++ky) {
              const int iy = y + ky - pad;
              if (iy < 0 || iy > 7) continue;
              for (int kx = 0; kx < K; ++kx) {
                const int ix = xq + kx - pad;
                if (ix < 0 || ix > 7) continue;
                const size_t widx = ((static_cast<size_t>(o) * K + ky) * K + kx) * C;
                const size_t xidx = ((static_cast<size_t>(i) * 8 + iy) * 8 + ix) * C;
                const T* wrow = w.ptr() + widx;
                const T* xrow = in + xidx;
                T* dwrow = dw.ptr() + widx;
                T* dxrow = dx.ptr() + xidx;
                for (int c = 0; c < C; ++c) {
                  dwrow[c] += go * xrow[c];
                  dxrow[c] += go * wrow[c];
                }
              }
            }
          }
        }
      }
    }
  }

  void forward_batchnorm(Node& n) {
    const Tensor<T>& x = in0(n).value;
    const int N = x.shape[0], C = ns(n).in_ch;
    if (x.shape[3] != C) throw ShapeMismatch("batchnorm " + ns(n).id + " channel mismatch");
    const size_t M = static_cast<size_t>(N) * 64;
    const Tensor<T>& gamma = params_.at(ns(n).id + ".gamma");
    const Tensor<T>& beta = params_.at(ns(n).id + ".beta");
    n.value = Tensor<T>(x.shape);
    n.stash = Tensor<T>(x.shape);
    n.bn_mean.assign(C, T(0));
    n.bn_invstd.assign(C, T(0));

    if (training_) {
      std::vector<T> mean(C, T(0)), var(C, T(0));
      const T* in = x.ptr();
      for (size_t r = 0; r < M; ++r)
        for (int c = 0; c < C; ++c) mean[c] += in[r * C + c];
      for (int c = 0; c < C; ++c) mean[c] /= static_cast<T>(M);
      for (size_t r = 0; r < M; ++r)
        for (int c = 0; c < C; ++c) {
          const T d = in[r * C + c] - mean[c];
          var[c] += d * d;
        }
      for (int c = 0; c < C; ++c) var[c] /= static_cast<T>(M);

      Tensor<T>& rmean = buffers_.at(ns(n).id + ".rmean");
      Tensor<T>& rvar = buffers_.at(ns(n).id + ".rvar");
      for (int c = 0; c < C; ++c) {
        rmean.data[c] = kBnMomentum * rmean.data[c] + (T(1) - kBnMomentum) * mean[c];
        rvar.data[c] = kBnMomentum * rvar.data[c] + (T(1) - kBnMomentum) * var[c];
      }
      for (int c = 0; c < C; ++c) {
        n.bn_mean[c] = mean[c];
        n.bn_invstd[c] = T(1) / std::sqrt(var[c] + kBnEps);
      }
    } else {
      const Tensor<T>& rmean = buffers_.at(ns(n).id + ".rmean");
      const Tensor<T>& rvar = buffers_.at(ns(n).id + ".rvar");
      for (int c = 0; c < C; ++c) {
        n.bn_mean[c] = rmean.data[c];
        n.bn_invstd[c] = T(1) / std::sqrt(rvar.data[c] + kBnEps);
      }
    }

    const T* in = x.ptr();
    T* xhat = n.stash.ptr();
    T* out = n.value.ptr();
    for (size_t r = 0; r < M; ++r)
      for (int c = 0; c < C; ++c) {
        const T h = (in[r * C + c] - n.bn_mean[c]) * n.bn_invstd[c];
        xhat[r * C + c] = h;
        out[r * C + c] = gamma.data[c] * h + beta.data[c];
      }
  }

  void backward_batchnorm(Node& n) {
    const Tensor<T>& x = in0(n).value;
    Tensor<T>& dx = in0(n).grad;
    const int N = x.shape[0], C = ns(n).in_ch;
    const size_t M = static_cast<size_t>(N) * 64;
    const Tensor<T>& gamma = params_.at(ns(n).id + ".gamma");
    Tensor<T>& dgamma = grads_.at(ns(n).id + ".gamma");
    Tensor<T>& dbeta = grads_.at(ns(n).id + ".beta");
    const T* dy = n.grad.ptr();
    const T* xhat = n.stash.ptr();

    std::vector<T> sum_dy(C, T(0)), sum_dy_xhat(C, T(0));
    for (size_t r = 0; r < M; ++r)
      for (int c = 0; c < C; ++c) {
        sum_dy[c] += dy[r * C + c];
        sum_dy_xhat[c] += dy[r * C + c] * xhat[r * C + c];
      }
    for (int c = 0; c < C; ++c) {
      dgamma.data[c] += sum_dy_xhat[c];
      dbeta.data[c] += sum_dy[c];
    }
    T* out = dx.ptr();
    for (size_t r = 0; r < M; ++r)
      for (int c = 0; c < C; ++c) {
        const T term = static_cast<T>(M) * dy[r * C + c] - sum_dy[c] -
                       xhat[r * C + c] * sum_dy_xhat[c];
        out[r * C + c] += gamma.data[c] * n.bn_invstd[c] / static_cast<T>(M) * term;
      }
  }

  void forward_relu(Node& n) {
    const Tensor<T>& x = in0(n).value;
    n.value = Tensor<T>(x.shape);
    for (size_t i = 0; i < x.size(); ++i) n.value.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
  }
  void backward_relu(Node& n) {
    Tensor<T>& dx = in0(n).grad;
    const Tensor<T>& x = in0(n).value;
    for (size_t i = 0; i < x.size(); ++i)
      if (x.data[i] > T(0)) dx.data[i] += n.grad.data[i];
  }

  void forward_tanh(Node& n) {
    const Tensor<T>& x = in0(n).value;
    n.value = Tensor<T>(x.shape);
    for (size_t i = 0; i < x.size(); ++i) n.value.data[i] = std::tanh(x.data[i]);
  }
  void backward_tanh(Node& n) {
    Tensor<T>& dx = in0(n).grad;
    for (size_t i = 0; i < n.value.size(); ++i) {
      const T y = n.value.data[i];
      dx.data[i] += n.grad.data[i] * (T(1) - y * y);
    }
  }

  void forward_sigmoid(Node& n) {
    const Tensor<T>& x = in0(n).value;
    n.value = Tensor<T>(x.shape);
    for (size_t i = 0; i < x.size(); ++i) n.value.data[i] = T(1) / (T(1) + std::exp(-x.data[i]));
  }
  void backward_sigmoid(Node& n) {
    Tensor<T>& dx = in0(n).grad;
    for (size_t i = 0; i < n.value.size(); ++i) {
      const T y = n.value.data[i];
      dx.data[i] += n.grad.data[i] * y * (T(1) - y);
    }
  }

  void forward_add(Node& n) {
    const Tensor<T>& a = in0(n).value;
    const Tensor<T>& b = in1(n).value;
    check_same_shape(a, b, "add");
    n.value = Tensor<T>(a.shape);
    for (size_t i = 0; i < a.size(); ++i) n.value.data[i] = a.data[i] + b.data[i];
  }
  void backward_add(Node& n) {
    Tensor<T>& da = in0(n).grad;
    Tensor<T>& db = in1(n).grad;
    for (size_t i = 0; i < n.grad.size(); ++i) {
      da.data[i] += n.grad.data[i];
      db.data[i] += n.grad.data[i];
    }
  }

  void forward_dense(Node& n) {
    const Tensor<T>& x = in0(n).value;
    const int N = x.shape[0], D = ns(n).in_ch, O = ns(n).out_ch;
    if (x.shape.size() != 2 || x.shape[1] != D)
      throw ShapeMismatch("dense " + ns(n).id + " wants [N," + std::to_string(D) + "]");
    const Tensor<T>& w = params_.at(ns(n).id + ".w");
    const Tensor<T>& b = params_.at(ns(n).id + ".b");
    wpack_.assign(static_cast<size_t>(D) * O, T(0));
    for (int o = 0; o < O; ++o)
      for (int d = 0; d < D; ++d) wpack_[static_cast<size_t>(d) * O + o] = w.data[static_cast<size_t>(o) * D + d];
    n.value = Tensor<T>({N, O});
    for (int i = 0; i < N; ++i) {
      T* orow = n.value.ptr() + static_cast<size_t>(i) * O;
      const T* xrow = x.ptr() + static_cast<size_t>(i) * D;
      for (int o = 0; o < O; ++o) orow[o] = b.data[o];
      for (int d = 0; d < D; ++d) {
        const T a = xrow[d];
        if (a == T(0)) continue;
        const T* wv = wpack_.data() + static_cast<size_t>(d) * O;
        for (int o = 0; o < O; ++o) orow[o] += a * wv[o];
      }
    }
  }

  void backward_dense(Node& n) {
    const Tensor<T>& x = in0(n).value;
    Tensor<T>& dx = in0(n).grad;
    const int N = x.shape[0], D = ns(n).in_ch, O = ns(n).out_ch;
    const Tensor<T>& w = params_.at(ns(n).id + ".w");
    Tensor<T>& dw = grads_.at(ns(n).id + ".w");
    Tensor<T>& db = grads_.at(ns(n).id + ".b");
    for (int i = 0; i < N; ++i) {
      const T* grow = n.grad.ptr() + static_cast<size_t>(i) * O;
      const T* xrow = x.ptr() + static_cast<size_t>(i) * D;
      T* dxrow = dx.ptr() + static_cast<size_t>(i) * D;
      for (int o = 0; o < O; ++o) {
        const T go = grow[o];
        db.data[o] += go;
        if (go == T(0)) continue;
        const T* wrow = w.ptr() + static_cast<size_t>(o) * D;
        T* dwrow = dw.ptr() + static_cast<size_t>(o) * D;
        for (int d = 0; d < D; ++d) {
          dwrow[d] += go * xrow[d];
          dxrow[d] += go * wrow[d];
        }
      }
    }
  }

  void forward_flatten(Node& n) {
    const Tensor<T>& x = in0(n).value;
    if (x.shape.size() != 4) throw ShapeMismatch("flatten wants [N,8,8,C]");
    n.value = x;
    n.value.shape = {x.shape[0], x.shape[1] * x.shape[2] * x.shape[3]};
  }
  void backward_flatten(Node& n) {
    Tensor<T>& dx = in0(n).grad;
    for (size_t i = 0; i < n.grad.size(); ++i) dx.data[i] += n.grad.data[i];
  }

  void forward_softmax(Node& n) {
    const Tensor<T>& x = in0(n).value;
    const int K = x.shape.back();
    const size_t rows = x.size() / K;
    n.value = Tensor<T>(x.shape);
    for (size_t r = 0; r < rows; ++r) {
      const T* xr = x.ptr() + r * K;
      T* yr = n.value.ptr() + r * K;
      T mx = xr[0];
      for (int k = 1; k < K; ++k) mx = std::max(mx, xr[k]);
      T sum = T(0);
      for (int k = 0; k < K; ++k) {
        yr[k] = std::exp(xr[k] - mx);
        sum += yr[k];
      }
      for (int k = 0; k < K; ++k) yr[k] /= sum;
    }
  }
  void backward_softmax(Node& n) {
    Tensor<T>& dx = in0(n).grad;
    const int K = n.value.shape.back();
    const size_t rows = n.value.size() / K;
    for (size_t r = 0; r < rows; ++r) {
      const T* y = n.value.ptr() + r * K;
      const T* dy = n.grad.ptr() + r * K;
      T dot = T(0);
      for (int k = 0; k < K; ++k) dot += y[k] * dy[k];
      T* out = dx.ptr() + r * K;
      for (int k = 0; k < K; ++k) out[k] += y[k] * (dy[k] - dot);
    }
  }

  GraphSpec spec_;
  std::vector<Node> nodes_;
  std::map<std::string, int> node_index_;
  std::map<std::string, Tensor<T>> params_;
  std::map<std::string, Tensor<T>> grads_;
  std::map<std::string, Tensor<T>> buffers_;
  std::vector<std::string> param_order_;
  std::vector<std::string> buffer_order_;
  std::vector<T> wpack_;
  bool training_ = false;
  bool forward_ran_ = false;
};

}  // namespace hc::nn
