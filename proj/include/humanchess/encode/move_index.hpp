#pragma once

#include <algorithm>
#include <optional>

#include "humanchess/chess/position.hpp"

namespace hc::encode {

// Move index layout: index = plane * 64 + from_square, everything expressed
// in mover-relative orientation (ranks flipped for black, files unchanged).
//   planes  0..55  queen-like moves, direction-major: N,NE,E,SE,S,SW,W,NW
//                  with distances 1..7 inside each direction
//   planes 56..63  knight moves, fixed offset order (see kKnightOffsets)
//   planes 64..72  underpromotions, (N,B,R) x (forward, capture-left,
//                  capture-right); queen promotions use the queen-like planes
constexpr int kMovePlanes = 73;
constexpr int kMoveIndexCount = kMovePlanes * 64;  // 4672

namespace detail {

constexpr int kQueenDirs[8][2] = {
    {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}};
constexpr int kKnightOffsets[8][2] = {
    {1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};

constexpr chess::Square orient(chess::Square s, chess::Color mover) {
  return mover == chess::Color::White ? s : chess::make_square(chess::file_of(s), 7 - chess::rank_of(s));
}

}  // namespace detail

struct UnencodableMove : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int encode_move(const chess::Move& m, const chess::Position& p) {
  using namespace chess;
  const Color mover = p.side_to_move();
  const Square from = detail::orient(m.from, mover);
  const Square to = detail::orient(m.to, mover);
  const int df = file_of(to) - file_of(from);
  const int dr = rank_of(to) - rank_of(from);

  if (m.promotion != PieceKind::None && m.promotion != PieceKind::Queen) {
    const int piece_idx = static_cast<int>(m.promotion) - static_cast<int>(PieceKind::Knight);
    int dir_idx;
    if (df == 0) dir_idx = 0;
    else if (df == -1) dir_idx = 1;
    else if (df == 1) dir_idx = 2;
    else throw UnencodableMove("bad underpromotion displacement");
    return (64 + piece_idx * 3 + dir_idx) * 64 + from;
  }

  for (int k = 0; k < 8; ++k) {
    if (df == detail::kKnightOffsets[k][0] && dr == detail::kKnightOffsets[k][1])
      return (56 + k) * 64 + from;
  }

  for (int d = 0; d < 8; ++d) {
    const int sf = detail::kQueenDirs[d][0], sr = detail::kQueenDirs[d][1];
    if (sf * dr != sr * df) continue;  // not collinear with this direction
    const int dist = std::max(std::abs(df), std::abs(dr));
    if (dist < 1 || dist > 7) continue;
    if (df != sf * dist || dr != sr * dist) continue;
    return (d * 7 + dist - 1) * 64 + from;
  }
  throw UnencodableMove("no plane for displacement");
}

// Inverse of encode_move where the geometric move is legal in p. A sorted
// legal-move list may be passed to amortize the legality check over a full
// index scan.
inline std::optional<chess::Move> decode_move(int index, const chess::Position& p,
                                              const std::vector<chess::Move>* sorted_legal = nullptr) {
  using namespace chess;
  if (index < 0 || index >= kMoveIndexCount) return std::nullopt;
  const Color mover = p.side_to_move();
  const int plane = index / 64;
  const Square from_oriented = index % 64;
  const int ff = file_of(from_oriented), fr = rank_of(from_oriented);

  int df, dr;
  PieceKind promo = PieceKind::None;
  bool underpromo = false;
  if (plane < 56) {
    const int d = plane / 7, dist = plane % 7 + 1;
    df = detail::kQueenDirs[d][0] * dist;
    dr = detail::kQueenDirs[d][1] * dist;
  } else if (plane < 64) {
    df = detail::kKnightOffsets[plane - 56][0];
    dr = detail::kKnightOffsets[plane - 56][1];
  } else {
    const int u = plane - 64;
    static constexpr PieceKind kPromos[3] = {PieceKind::Knight, PieceKind::Bishop, PieceKind::Rook};
    promo = kPromos[u / 3];
    df = (u % 3 == 0) ? 0 : (u % 3 == 1 ? -1 : 1);
    dr = 1;
    underpromo = true;
  }
  const int tf = ff + df, tr = fr + dr;
  if (tf < 0 || tf > 7 || tr < 0 || tr > 7) return std::nullopt;

  Move m{detail::orient(from_oriented, mover),
         detail::orient(make_square(tf, tr), mover), promo};
  const Piece moving = p.at(m.from);
  if (is_empty(moving) || color_of(moving) != mover) return std::nullopt;
  if (underpromo && kind_of(moving) != PieceKind::Pawn) return std::nullopt;
  // queen-like plane reaching the last rank with a pawn implies =Q
  if (!underpromo && kind_of(moving) == PieceKind::Pawn && tr == 7) m.promotion = PieceKind::Queen;
  if (sorted_legal) {
    if (!std::binary_search(sorted_legal->begin(), sorted_legal->end(), m)) return std::nullopt;
  } else if (!p.is_legal(m)) {
    return std::nullopt;
  }
  return m;
}

}  // namespace hc::encode
