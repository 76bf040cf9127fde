#pragma once

#include <optional>
#include <vector>

#include "humanchess/chess/position.hpp"
#include "humanchess/winprob/table.hpp"

namespace hc::encode {

// Blunder network input, stored plane-major (buf[plane * 64 + square], no
// orientation flip):
//   planes  0..11   pieces, white P,N,B,R,Q,K then black P,N,B,R,Q,K
//   planes 12..15   castling rights K,Q,k,q
//   plane  16       all ones when the active player is white
// and with metadata, five more spatially constant planes:
//   plane  17       white rating / 3000, clamped to 1
//   plane  18       black rating / 3000, clamped to 1
//   plane  19       white time fraction remaining
//   plane  20       black time fraction remaining
//   plane  21       board eval as win probability (white's perspective)
constexpr int kBlunderBoardPlanes = 17;
constexpr int kBlunderMetaPlanes = 22;

struct MetadataVector {
  int white_rating = 0;
  int black_rating = 0;
  float white_time_fraction = 0.0f;
  float black_time_fraction = 0.0f;
  int cp = 0;  // white's perspective
};

inline int blunder_plane_count(bool with_metadata) {
  return with_metadata ? kBlunderMetaPlanes : kBlunderBoardPlanes;
}

inline void encode_blunder_input(const chess::Position& p,
                                 const std::optional<MetadataVector>& meta,
                                 const winprob::WinProbTable* table, float* buf) {
  using namespace chess;
  const int planes = blunder_plane_count(meta.has_value());
  std::fill(buf, buf + planes * 64, 0.0f);

  for (Square s = 0; s < 64; ++s) {
    const Piece pc = p.at(s);
    if (is_empty(pc)) continue;
    const int side = color_of(pc) == Color::White ? 0 : 6;
    buf[(side + static_cast<int>(kind_of(pc)) - 1) * 64 + s] = 1.0f;
  }
  const CastlingRights cr = p.castling();
  const bool rights[4] = {cr.wk, cr.wq, cr.bk, cr.bq};
  for (int i = 0; i < 4; ++i)
    if (rights[i]) std::fill_n(buf + (12 + i) * 64, 64, 1.0f);
  if (p.side_to_move() == Color::White) std::fill_n(buf + 16 * 64, 64, 1.0f);

  if (meta) {
    auto norm_rating = [](int r) { return std::min(1.0f, static_cast<float>(r) / 3000.0f); };
    const float values[5] = {
        norm_rating(meta->white_rating), norm_rating(meta->black_rating),
        std::clamp(meta->white_time_fraction, 0.0f, 1.0f),
        std::clamp(meta->black_time_fraction, 0.0f, 1.0f),
        table ? static_cast<float>(table->lookup(winprob::clamp_cp(meta->cp))) : 0.5f};
    for (int i = 0; i < 5; ++i) std::fill_n(buf + (17 + i) * 64, 64, values[i]);
  }
}

inline std::vector<float> encode_blunder_input(const chess::Position& p,
                                               const std::optional<MetadataVector>& meta,
                                               const winprob::WinProbTable* table) {
  std::vector<float> buf(blunder_plane_count(meta.has_value()) * 64);
  encode_blunder_input(p, meta, table, buf.data());
  return buf;
}

}  // namespace hc::encode
