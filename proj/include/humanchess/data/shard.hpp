#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "humanchess/pgn/filter.hpp"

namespace hc::data {

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorruptShard : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int16_t kAbsentEval = -32768;

// On-disk training/eval record. The FEN is the root of the history window
// (up to 12 ply before the decision); replaying prior_moves from it yields
// the position the played move was chosen in.
struct ShardRecord {
  std::string fen;
  std::vector<std::string> prior_moves;  // UCI, oldest first
  std::string played;                    // UCI
  uint16_t mover_rating = 0;
  float white_clock_fraction = 1.0f;
  float black_clock_fraction = 1.0f;
  int16_t eval_before = kAbsentEval;
  int16_t eval_after = kAbsentEval;
  uint8_t result_for_mover = 1;  // 0 loss, 1 draw, 2 win
  uint8_t blunder = 255;         // 0, 1, 255 unlabeled

  bool operator==(const ShardRecord&) const = default;

  static ShardRecord from_instance(const pgn::MoveInstance& inst) {
    ShardRecord r;
    const auto& h = inst.history;
    r.fen = h.prior().empty() ? h.current().to_fen() : h.prior().front().first.to_fen();
    for (const auto& [pos, move] : h.prior()) r.prior_moves.push_back(chess::to_uci(move));
    r.played = chess::to_uci(inst.played);
    r.mover_rating = static_cast<uint16_t>(std::clamp(inst.mover_rating, 0, 65535));
    const bool white_moves = inst.mover() == chess::Color::White;
    r.white_clock_fraction = white_moves ? inst.mover_clock_fraction : inst.opponent_clock_fraction;
    r.black_clock_fraction = white_moves ? inst.opponent_clock_fraction : inst.mover_clock_fraction;
    r.eval_before = inst.eval_before ? static_cast<int16_t>(*inst.eval_before) : kAbsentEval;
    r.eval_after = inst.eval_after ? static_cast<int16_t>(*inst.eval_after) : kAbsentEval;
    r.result_for_mover = static_cast<uint8_t>(inst.result_for_mover * 2.0 + 0.5);
    r.blunder = inst.blunder_label;
    return r;
  }

  pgn::MoveInstance to_instance() const {
    pgn::MoveInstance inst;
    chess::PositionHistory h(chess::Position::from_fen(fen));
    for (const auto& uci : prior_moves) {
      auto m = chess::parse_uci(uci);
      if (!m) throw CorruptShard("bad prior move " + uci);
      h.push(*m);
    }
    inst.history = std::move(h);
    auto m = chess::parse_uci(played);
    if (!m) throw CorruptShard("bad played move " + played);
    inst.played = *m;
    inst.mover_rating = mover_rating;
    const bool white_moves = inst.history.current().side_to_move() == chess::Color::White;
    inst.mover_clock_fraction = white_moves ? white_clock_fraction : black_clock_fraction;
    inst.opponent_clock_fraction = white_moves ? black_clock_fraction : white_clock_fraction;
    if (eval_before != kAbsentEval) inst.eval_before = eval_before;
    if (eval_after != kAbsentEval) inst.eval_after = eval_after;
    inst.result_for_mover = result_for_mover / 2.0;
    inst.blunder_label = blunder;
    return inst;
  }
};

namespace wire {

static_assert(std::endian::native == std::endian::little, "shards are little-endian");

constexpr char kMagic[5] = {'M', 'S', 'H', 'D', '1'};
constexpr uint32_t kVersion = 1;

template <typename I>
void put(std::ostream& out, I v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename I>
I get(std::istream& in, const char* what) {
  I v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw CorruptShard(std::string("truncated shard at ") + what);
  return v;
}

inline void put_string(std::ostream& out, const std::string& s, bool short_len) {
  if (short_len) put<uint8_t>(out, static_cast<uint8_t>(s.size()));
  else put<uint16_t>(out, static_cast<uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, bool short_len, const char* what) {
  const size_t len = short_len ? get<uint8_t>(in, what) : get<uint16_t>(in, what);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw CorruptShard(std::string("truncated shard at ") + what);
  return s;
}

inline void put_record(std::ostream& out, const ShardRecord& r) {
  put_string(out, r.fen, false);
  put<uint8_t>(out, static_cast<uint8_t>(r.prior_moves.size()));
  for (const auto& m : r.prior_moves) put_string(out, m, true);
  put_string(out, r.played, true);
  put<uint16_t>(out, r.mover_rating);
  put<float>(out, r.white_clock_fraction);
  put<float>(out, r.black_clock_fraction);
  put<int16_t>(out, r.eval_before);
  put<int16_t>(out, r.eval_after);
  put<uint8_t>(out, r.result_for_mover);
  put<uint8_t>(out, r.blunder);
}

inline ShardRecord get_record(std::istream& in) {
  ShardRecord r;
  r.fen = get_string(in, false, "fen");
  const uint8_t prior = get<uint8_t>(in, "prior count");
  if (prior > chess::kHistoryPly) throw CorruptShard("prior move count out of range");
  for (int i = 0; i < prior; ++i) r.prior_moves.push_back(get_string(in, true, "prior move"));
  r.played = get_string(in, true, "played move");
  r.mover_rating = get<uint16_t>(in, "rating");
  r.white_clock_fraction = get<float>(in, "white clock");
  r.black_clock_fraction = get<float>(in, "black clock");
  r.eval_before = get<int16_t>(in, "eval before");
  r.eval_after = get<int16_t>(in, "eval after");
  r.result_for_mover = get<uint8_t>(in, "result");
  r.blunder = get<uint8_t>(in, "blunder");
  return r;
}

}  // namespace wire

// Single-writer shard file; the record count is patched on close.
class ShardWriter {
 public:
  explicit ShardWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoFailure("cannot open shard for write: " + path);
    out_.write(wire::kMagic, sizeof wire::kMagic);
    wire::put<uint32_t>(out_, wire::kVersion);
    wire::put<uint64_t>(out_, 0);  // patched in close()
  }

  void add(const ShardRecord& r) {
    wire::put_record(out_, r);
    ++count_;
  }

  uint64_t count() const { return count_; }

  void close() {
    if (closed_) return;
    out_.seekp(sizeof wire::kMagic + sizeof(uint32_t));
    wire::put<uint64_t>(out_, count_);
    out_.flush();
    if (!out_) throw IoFailure("shard write failed: " + path_);
    out_.close();
    closed_ = true;
  }

  ~ShardWriter() {
    try {
      close();
    } catch (...) {
    }
  }

 private:
  std::string path_;
  std::ofstream out_;
  uint64_t count_ = 0;
  bool closed_ = false;
};

class ShardReader {
 public:
  explicit ShardReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoFailure("cannot open shard for read: " + path);
    char magic[5];
    in_.read(magic, sizeof magic);
    if (!in_ || std::memcmp(magic, wire::kMagic, sizeof magic) != 0)
      throw CorruptShard("bad shard magic in " + path);
    const uint32_t version = wire::get<uint32_t>(in_, "version");
    if (version != wire::kVersion) throw CorruptShard("unsupported shard version");
    remaining_ = wire::get<uint64_t>(in_, "record count");
  }

  uint64_t remaining() const { return remaining_; }

  std::optional<ShardRecord> next() {
    if (remaining_ == 0) {
      // trailing garbage means the count header lied
      if (in_.peek() != EOF) throw CorruptShard("bytes beyond the declared record count");
      return std::nullopt;
    }
    --remaining_;
    ++index_;
    try {
      return wire::get_record(in_);
    } catch (const CorruptShard& e) {
      throw CorruptShard(std::string(e.what()) + " (record " + std::to_string(index_) + ")");
    }
  }

 private:
  std::ifstream in_;
  uint64_t remaining_ = 0;
  uint64_t index_ = 0;
};

inline void write_shard(const std::vector<ShardRecord>& records, const std::string& path) {
  ShardWriter w(path);
  for (const auto& r : records) w.add(r);
  w.close();
}

inline std::vector<ShardRecord> read_shard(const std::string& path) {
  ShardReader r(path);
  std::vector<ShardRecord> out;
  while (auto rec = r.next()) out.push_back(std::move(*rec));
  return out;
}

}  // namespace hc::data
