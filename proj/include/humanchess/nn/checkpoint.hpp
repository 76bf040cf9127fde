#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "humanchess/nn/graph.hpp"

namespace hc::nn {

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VersionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorruptCheckpoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint layout (all integers little-endian):
//   magic "MAIA1" | u32 version | u64 config_len | config JSON
//   u32 tensor_count | tensors
// tensor: u16 name_len | name | u8 dtype (0 f32, 1 f64) | u8 ndim
//         | u32 dims[ndim] | raw payload
// Parameters are stored in graph order, then batch-norm running buffers.
namespace ckpt {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian");

constexpr char kMagic[5] = {'M', 'A', 'I', 'A', '1'};
constexpr uint32_t kVersion = 1;

template <typename I>
void write_int(std::ostream& out, I v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename I>
I read_int(std::istream& in) {
  I v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw CorruptCheckpoint("truncated checkpoint");
  return v;
}

template <typename T>
constexpr uint8_t dtype_code() {
  return sizeof(T) == 4 ? 0 : 1;
}

template <typename T>
void write_tensor(std::ostream& out, const std::string& name, const Tensor<T>& t) {
  write_int<uint16_t>(out, static_cast<uint16_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_int<uint8_t>(out, dtype_code<T>());
  write_int<uint8_t>(out, static_cast<uint8_t>(t.shape.size()));
  for (int d : t.shape) write_int<uint32_t>(out, static_cast<uint32_t>(d));
  out.write(reinterpret_cast<const char*>(t.ptr()),
            static_cast<std::streamsize>(t.size() * sizeof(T)));
}

template <typename T>
std::pair<std::string, Tensor<T>> read_tensor(std::istream& in) {
  const uint16_t name_len = read_int<uint16_t>(in);
  std::string name(name_len, '\0');
  in.read(name.data(), name_len);
  if (!in) throw CorruptCheckpoint("truncated tensor name");
  const uint8_t dtype = read_int<uint8_t>(in);
  if (dtype != dtype_code<T>()) throw CorruptCheckpoint("tensor dtype mismatch for " + name);
  const uint8_t ndim = read_int<uint8_t>(in);
  std::vector<int> shape;
  for (int i = 0; i < ndim; ++i) shape.push_back(static_cast<int>(read_int<uint32_t>(in)));
  Tensor<T> t(shape);
  in.read(reinterpret_cast<char*>(t.ptr()), static_cast<std::streamsize>(t.size() * sizeof(T)));
  if (!in) throw CorruptCheckpoint("truncated tensor payload for " + name);
  return {name, std::move(t)};
}

}  // namespace ckpt

template <typename T>
void save_checkpoint(const NetGraph<T>& net, const std::string& path,
                     const nlohmann::json& meta = nlohmann::json::object()) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open for write: " + path);

  out.write(ckpt::kMagic, sizeof ckpt::kMagic);
  ckpt::write_int<uint32_t>(out, ckpt::kVersion);

  nlohmann::json config;
  config["graph"] = net.spec().to_json();
  config["meta"] = meta;
  const std::string blob = config.dump();
  ckpt::write_int<uint64_t>(out, blob.size());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));

  const uint32_t count =
      static_cast<uint32_t>(net.param_order().size() + net.buffer_order().size());
  ckpt::write_int<uint32_t>(out, count);
  for (const auto& name : net.param_order()) ckpt::write_tensor(out, name, net.param(name));
  for (const auto& name : net.buffer_order()) ckpt::write_tensor(out, name, net.buffer(name));
  if (!out) throw IoFailure("write failed: " + path);
}

template <typename T>
NetGraph<T> load_checkpoint(const std::string& path, nlohmann::json* meta_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open for read: " + path);

  char magic[5];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, ckpt::kMagic, sizeof magic) != 0)
    throw CorruptCheckpoint("bad magic in " + path);
  const uint32_t version = ckpt::read_int<uint32_t>(in);
  if (version != ckpt::kVersion)
    throw VersionMismatch("checkpoint version " + std::to_string(version));

  const uint64_t blob_len = ckpt::read_int<uint64_t>(in);
  std::string blob(blob_len, '\0');
  in.read(blob.data(), static_cast<std::streamsize>(blob_len));
  if (!in) throw CorruptCheckpoint("truncated config blob");
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(blob);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint(std::string("bad config blob: ") + e.what());
  }
  if (meta_out) *meta_out = config.value("meta", nlohmann::json::object());

  NetGraph<T> net(GraphSpec::from_json(config.at("graph")), /*init_seed=*/0);
  const uint32_t count = ckpt::read_int<uint32_t>(in);
  uint32_t loaded = 0;
  for (uint32_t i = 0; i < count; ++i) {
    auto [name, tensor] = ckpt::read_tensor<T>(in);
    if (net.has_param(name)) {
      check_same_shape(tensor, net.param(name), "checkpoint param");
      net.param(name) = std::move(tensor);
    } else if (net.has_buffer(name)) {
      check_same_shape(tensor, net.buffer(name), "checkpoint buffer");
      net.buffer(name) = std::move(tensor);
    } else {
      throw CorruptCheckpoint("unknown tensor " + name);
    }
    ++loaded;
  }
  if (loaded != net.param_order().size() + net.buffer_order().size())
    throw CorruptCheckpoint("tensor count mismatch");
  return net;
}

}  // namespace hc::nn
