#pragma once

#include <vector>

#include "humanchess/chess/history.hpp"

namespace hc::encode {

// Policy network input, 162 planes of 8x8, stored plane-major
// (buf[plane * 64 + square], squares in mover-relative orientation):
//   planes   0..155  13 frames x 12 piece planes; frame 0 is the current
//                    position, frame k the position k ply earlier, absent
//                    frames zeroed; within a frame: mover P,N,B,R,Q,K then
//                    opponent P,N,B,R,Q,K
//   planes 156..159  castling rights: mover king-side, mover queen-side,
//                    opponent king-side, opponent queen-side
//   plane  160       all ones when the mover is black (board was flipped)
//   plane  161       halfmove clock / 100, clamped to 1
constexpr int kPolicyFrames = 13;
constexpr int kPolicyPlanes = kPolicyFrames * 12 + 6;  // 162
constexpr int kPolicyInputSize = kPolicyPlanes * 64;

inline void encode_policy_input(const chess::PositionHistory& h, float* buf,
                                bool include_history = true) {
  using namespace chess;
  std::fill(buf, buf + kPolicyInputSize, 0.0f);
  const Color mover = h.current().side_to_move();

  auto fill_frame = [&](int frame, const Position& pos) {
    float* base = buf + frame * 12 * 64;
    for (Square s = 0; s < 64; ++s) {
      const Piece pc = pos.at(s);
      if (is_empty(pc)) continue;
      const int side = color_of(pc) == mover ? 0 : 6;
      const int plane = side + static_cast<int>(kind_of(pc)) - 1;
      const Square sq = mover == Color::White ? s : make_square(file_of(s), 7 - rank_of(s));
      base[plane * 64 + sq] = 1.0f;
    }
  };

  fill_frame(0, h.current());
  if (include_history) {
    for (int k = 1; k <= kHistoryPly; ++k) {
      const Position* pos = h.back(k);
      if (!pos) break;
      fill_frame(k, *pos);
    }
  }

  const CastlingRights cr = h.current().castling();
  const bool flip = mover == Color::Black;
  const bool rights[4] = {flip ? cr.bk : cr.wk, flip ? cr.bq : cr.wq,
                          flip ? cr.wk : cr.bk, flip ? cr.wq : cr.bq};
  for (int i = 0; i < 4; ++i)
    if (rights[i]) std::fill_n(buf + (156 + i) * 64, 64, 1.0f);
  if (flip) std::fill_n(buf + 160 * 64, 64, 1.0f);
  const float hm = std::min(1.0f, static_cast<float>(h.current().halfmove_clock()) / 100.0f);
  std::fill_n(buf + 161 * 64, 64, hm);
}

inline std::vector<float> encode_policy_input(const chess::PositionHistory& h,
                                              bool include_history = true) {
  std::vector<float> buf(kPolicyInputSize);
  encode_policy_input(h, buf.data(), include_history);
  return buf;
}

}  // namespace hc::encode
