#pragma once

#include <array>
#include <bit>
#include <cstdint>

#include "humanchess/chess/types.hpp"

namespace hc::chess {

using Bitboard = uint64_t;

constexpr Bitboard bb(Square s) { return 1ULL << s; }

inline int popcount(Bitboard b) { return std::popcount(b); }
inline Square lsb(Bitboard b) { return std::countr_zero(b); }
inline Square msb(Bitboard b) { return 63 - std::countl_zero(b); }
inline Square pop_lsb(Bitboard& b) {
  Square s = lsb(b);
  b &= b - 1;
  return s;
}

namespace detail {

constexpr bool on_board(int f, int r) { return f >= 0 && f < 8 && r >= 0 && r < 8; }

struct Tables {
  std::array<Bitboard, 64> knight{};
  std::array<Bitboard, 64> king{};
  // pawn_attacks[color][sq]: squares a pawn of `color` on `sq` attacks.
  std::array<std::array<Bitboard, 64>, 2> pawn{};
  // rays[dir][sq], dirs: 0=N 1=NE 2=E 3=SE 4=S 5=SW 6=W 7=NW (excluding sq).
  std::array<std::array<Bitboard, 64>, 8> rays{};

  constexpr Tables() {
    constexpr int kn[8][2] = {{1, 2},  {2, 1},  {2, -1}, {1, -2},
                              {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};
    constexpr int kg[8][2] = {{0, 1},  {1, 1},  {1, 0},  {1, -1},
                              {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}};
    constexpr int dirs[8][2] = {{0, 1}, {1, 1}, {1, 0}, {1, -1},
                                {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}};
    for (int s = 0; s < 64; ++s) {
      const int f = s & 7, r = s >> 3;
      for (auto& d : kn)
        if (on_board(f + d[0], r + d[1])) knight[s] |= 1ULL << make_square(f + d[0], r + d[1]);
      for (auto& d : kg)
        if (on_board(f + d[0], r + d[1])) king[s] |= 1ULL << make_square(f + d[0], r + d[1]);
      for (int df : {-1, 1}) {
        if (on_board(f + df, r + 1)) pawn[0][s] |= 1ULL << make_square(f + df, r + 1);
        if (on_board(f + df, r - 1)) pawn[1][s] |= 1ULL << make_square(f + df, r - 1);
      }
      for (int d = 0; d < 8; ++d) {
        int ff = f + dirs[d][0], rr = r + dirs[d][1];
        while (on_board(ff, rr)) {
          rays[d][s] |= 1ULL << make_square(ff, rr);
          ff += dirs[d][0];
          rr += dirs[d][1];
        }
      }
    }
  }
};

inline constexpr Tables kTables{};

// Directions indexed as in Tables::rays; positive dirs scan with lsb.
inline Bitboard ray_attack(int dir, Square s, Bitboard occ) {
  Bitboard attacks = kTables.rays[dir][s];
  Bitboard blockers = attacks & occ;
  if (blockers) {
    const bool forward = (dir == 0 || dir == 1 || dir == 2 || dir == 7);
    Square b = forward ? lsb(blockers) : msb(blockers);
    attacks ^= kTables.rays[dir][b];
  }
  return attacks;
}

}  // namespace detail

inline Bitboard knight_attacks(Square s) { return detail::kTables.knight[s]; }
inline Bitboard king_attacks(Square s) { return detail::kTables.king[s]; }
inline Bitboard pawn_attacks(Color c, Square s) {
  return detail::kTables.pawn[static_cast<int>(c)][s];
}

inline Bitboard bishop_attacks(Square s, Bitboard occ) {
  return detail::ray_attack(1, s, occ) | detail::ray_attack(3, s, occ) |
         detail::ray_attack(5, s, occ) | detail::ray_attack(7, s, occ);
}

inline Bitboard rook_attacks(Square s, Bitboard occ) {
  return detail::ray_attack(0, s, occ) | detail::ray_attack(2, s, occ) |
         detail::ray_attack(4, s, occ) | detail::ray_attack(6, s, occ);
}

inline Bitboard queen_attacks(Square s, Bitboard occ) {
  return bishop_attacks(s, occ) | rook_attacks(s, occ);
}

}  // namespace hc::chess
