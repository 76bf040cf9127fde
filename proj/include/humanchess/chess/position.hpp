#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "humanchess/chess/bitboard.hpp"
#include "humanchess/chess/types.hpp"

namespace hc::chess {

struct CastlingRights {
  bool wk = false, wq = false, bk = false, bq = false;
  constexpr bool operator==(const CastlingRights&) const = default;
  bool any() const { return wk || wq || bk || bq; }
};

// Immutable after construction; all mutating operations return a new value.
class Position {
 public:
  Position() = default;

  static Position startpos() { return from_fen(kStartFen); }

  static constexpr const char* kStartFen =
      "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

  // --- observers -----------------------------------------------------------

  Piece at(Square s) const { return board_[s]; }
  Color side_to_move() const { return stm_; }
  CastlingRights castling() const { return castling_; }
  std::optional<Square> en_passant() const {
    return ep_ == kNoSquare ? std::nullopt : std::optional<Square>(ep_);
  }
  int halfmove_clock() const { return halfmove_; }
  int fullmove_number() const { return fullmove_; }

  Bitboard pieces(Color c) const { return occ_[static_cast<int>(c)]; }
  Bitboard pieces(Color c, PieceKind k) const {
    return by_kind_[static_cast<int>(k)] & occ_[static_cast<int>(c)];
  }
  Bitboard occupied() const { return occ_[0] | occ_[1]; }
  Square king_square(Color c) const { return lsb(pieces(c, PieceKind::King)); }

  bool operator==(const Position& o) const {
    return board_ == o.board_ && stm_ == o.stm_ && castling_ == o.castling_ && ep_ == o.ep_ &&
           halfmove_ == o.halfmove_ && fullmove_ == o.fullmove_;
  }

  // --- FEN -----------------------------------------------------------------

  static Position from_fen(const std::string& fen) {
    std::istringstream in(fen);
    std::string fields[6];
    int n = 0;
    while (n < 6 && (in >> fields[n])) ++n;
    std::string extra;
    if (n != 6 || (in >> extra)) throw MalformedFen("expected six FEN fields: " + fen);

    Position p;
    int file = 0, rank = 7;
    for (char c : fields[0]) {
      if (c == '/') {
        if (file != 8 || rank == 0) throw MalformedFen("bad placement field");
        file = 0;
        --rank;
      } else if (c >= '1' && c <= '8') {
        file += c - '0';
        if (file > 8) throw MalformedFen("rank overflow in placement");
      } else {
        auto piece = piece_from_char(c);
        if (!piece || file > 7) throw MalformedFen("bad placement character");
        p.board_[make_square(file, rank)] = *piece;
        ++file;
      }
    }
    if (file != 8 || rank != 0) throw MalformedFen("placement does not cover 64 squares");

    if (fields[1] == "w") p.stm_ = Color::White;
    else if (fields[1] == "b") p.stm_ = Color::Black;
    else throw MalformedFen("bad side-to-move field");

    if (fields[2] != "-") {
      for (char c : fields[2]) {
        switch (c) {
          case 'K': p.castling_.wk = true; break;
          case 'Q': p.castling_.wq = true; break;
          case 'k': p.castling_.bk = true; break;
          case 'q': p.castling_.bq = true; break;
          default: throw MalformedFen("bad castling field");
        }
      }
    }

    if (fields[3] != "-") {
      auto sq = parse_square(fields[3]);
      if (!sq) throw MalformedFen("bad en-passant field");
      p.ep_ = *sq;
    }

    try {
      size_t pos = 0;
      p.halfmove_ = std::stoi(fields[4], &pos);
      if (pos != fields[4].size()) throw std::invalid_argument("");
      p.fullmove_ = std::stoi(fields[5], &pos);
      if (pos != fields[5].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw MalformedFen("bad clock fields");
    }
    if (p.halfmove_ < 0 || p.fullmove_ < 1) throw MalformedFen("bad clock values");

    p.rebuild_bitboards();
    p.validate();
    return p;
  }

  std::string to_fen() const {
    std::string out;
    for (int rank = 7; rank >= 0; --rank) {
      int empty = 0;
      for (int file = 0; file < 8; ++file) {
        Piece pc = board_[make_square(file, rank)];
        if (is_empty(pc)) {
          ++empty;
        } else {
          if (empty) out += static_cast<char>('0' + empty);
          empty = 0;
          out += piece_char(pc);
        }
      }
      if (empty) out += static_cast<char>('0' + empty);
      if (rank) out += '/';
    }
    out += stm_ == Color::White ? " w " : " b ";
    if (castling_.any()) {
      if (castling_.wk) out += 'K';
      if (castling_.wq) out += 'Q';
      if (castling_.bk) out += 'k';
      if (castling_.bq) out += 'q';
    } else {
      out += '-';
    }
    out += ' ';
    out += ep_ == kNoSquare ? "-" : square_name(ep_);
    out += ' ' + std::to_string(halfmove_) + ' ' + std::to_string(fullmove_);
    return out;
  }

  // --- attacks / checks ----------------------------------------------------

  bool is_attacked(Square s, Color by) const {
    const Bitboard occ = occupied();
    if (pawn_attacks(other(by), s) & pieces(by, PieceKind::Pawn)) return true;
    if (knight_attacks(s) & pieces(by, PieceKind::Knight)) return true;
    if (king_attacks(s) & pieces(by, PieceKind::King)) return true;
    const Bitboard diag = pieces(by, PieceKind::Bishop) | pieces(by, PieceKind::Queen);
    if (diag && (bishop_attacks(s, occ) & diag)) return true;
    const Bitboard line = pieces(by, PieceKind::Rook) | pieces(by, PieceKind::Queen);
    if (line && (rook_attacks(s, occ) & line)) return true;
    return false;
  }

  bool in_check() const { return is_attacked(king_square(stm_), other(stm_)); }

  // --- move generation -----------------------------------------------------

  // Unsorted; prefer legal_moves() anywhere ordering is observable.
  void legal_moves_into(std::vector<Move>& out) const {
    out.clear();
    std::vector<Move> pseudo;
    pseudo.reserve(64);
    generate_pseudo(pseudo);
    for (const Move& m : pseudo) {
      Position next = *this;
      next.do_move_unchecked(m);
      if (!next.is_attacked(next.king_square(stm_), next.stm_)) out.push_back(m);
    }
  }

  std::vector<Move> legal_moves() const {
    std::vector<Move> out;
    legal_moves_into(out);
    std::sort(out.begin(), out.end());
    return out;
  }

  bool is_legal(const Move& m) const {
    std::vector<Move> moves;
    legal_moves_into(moves);
    return std::find(moves.begin(), moves.end(), m) != moves.end();
  }

  Position apply(const Move& m) const {
    if (!is_legal(m)) throw IllegalMove("illegal move " + to_uci(m) + " in " + to_fen());
    Position next = *this;
    next.do_move_unchecked(m);
    return next;
  }

  uint64_t perft(int depth) const {
    if (depth <= 0) return 1;
    std::vector<Move> moves;
    legal_moves_into(moves);
    if (depth == 1) return moves.size();
    uint64_t total = 0;
    for (const Move& m : moves) {
      Position next = *this;
      next.do_move_unchecked(m);
      total += next.perft(depth - 1);
    }
    return total;
  }

  // --- color mirror --------------------------------------------------------

  // Vertical flip with color swap; castling rights and en passant follow.
  Position mirror_color() const {
    Position p;
    for (Square s = 0; s < 64; ++s) {
      Piece pc = board_[s];
      if (is_empty(pc)) continue;
      const Square flipped = make_square(file_of(s), 7 - rank_of(s));
      p.board_[flipped] = make_piece(other(color_of(pc)), kind_of(pc));
    }
    p.stm_ = other(stm_);
    p.castling_ = {castling_.bk, castling_.bq, castling_.wk, castling_.wq};
    p.ep_ = ep_ == kNoSquare ? kNoSquare : make_square(file_of(ep_), 7 - rank_of(ep_));
    p.halfmove_ = halfmove_;
    p.fullmove_ = fullmove_;
    p.rebuild_bitboards();
    return p;
  }

 private:
  void rebuild_bitboards() {
    occ_ = {0, 0};
    by_kind_.fill(0);
    for (Square s = 0; s < 64; ++s) {
      Piece p = board_[s];
      if (is_empty(p)) continue;
      occ_[static_cast<int>(color_of(p))] |= bb(s);
      by_kind_[static_cast<int>(kind_of(p))] |= bb(s);
    }
  }

  void validate() const {
    if (popcount(pieces(Color::White, PieceKind::King)) != 1 ||
        popcount(pieces(Color::Black, PieceKind::King)) != 1)
      throw IllegalPosition("exactly one king per color required");
    const Bitboard pawns = by_kind_[static_cast<int>(PieceKind::Pawn)];
    if (pawns & 0xFF000000000000FFULL) throw IllegalPosition("pawn on rank 1 or 8");
    if (ep_ != kNoSquare) {
      const int r = rank_of(ep_);
      if (!((stm_ == Color::Black && r == 2) || (stm_ == Color::White && r == 5)))
        throw IllegalPosition("en-passant square on wrong rank");
    }
    if (is_attacked(king_square(other(stm_)), stm_))
      throw IllegalPosition("side not to move is in check");
  }

  void remove_piece(Square s) {
    Piece p = board_[s];
    occ_[static_cast<int>(color_of(p))] &= ~bb(s);
    by_kind_[static_cast<int>(kind_of(p))] &= ~bb(s);
    board_[s] = kEmpty;
  }

  void put_piece(Square s, Piece p) {
    board_[s] = p;
    occ_[static_cast<int>(color_of(p))] |= bb(s);
    by_kind_[static_cast<int>(kind_of(p))] |= bb(s);
  }

  // Assumes pseudo-legality; legality filtering happens in the caller.
  void do_move_unchecked(const Move& m) {
    const Color us = stm_;
    const Color them = other(us);
    const Piece moving = board_[m.from];
    const PieceKind kind = kind_of(moving);
    const bool capture = !is_empty(board_[m.to]);
    const Square old_ep = ep_;
    ep_ = kNoSquare;

    if (capture) remove_piece(m.to);
    remove_piece(m.from);

    if (kind == PieceKind::Pawn && m.to == old_ep && old_ep != kNoSquare && !capture) {
      // en passant: captured pawn sits behind the target square
      remove_piece(make_square(file_of(m.to), rank_of(m.from)));
    }

    if (m.promotion != PieceKind::None) {
      put_piece(m.to, make_piece(us, m.promotion));
    } else {
      put_piece(m.to, moving);
    }

    if (kind == PieceKind::King) {
      const int df = file_of(m.to) - file_of(m.from);
      if (df == 2) {  // king side
        remove_piece(make_square(7, rank_of(m.from)));
        put_piece(make_square(5, rank_of(m.from)), make_piece(us, PieceKind::Rook));
      } else if (df == -2) {  // queen side
        remove_piece(make_square(0, rank_of(m.from)));
        put_piece(make_square(3, rank_of(m.from)), make_piece(us, PieceKind::Rook));
      }
      if (us == Color::White) castling_.wk = castling_.wq = false;
      else castling_.bk = castling_.bq = false;
    }

    if (kind == PieceKind::Pawn) {
      const int dr = rank_of(m.to) - rank_of(m.from);
      if (dr == 2 || dr == -2) ep_ = make_square(file_of(m.from), (rank_of(m.from) + rank_of(m.to)) / 2);
    }

    // rook moves or rook captures revoke rights, square based
    auto touch = [&](Square s) {
      if (s == 0) castling_.wq = false;
      else if (s == 7) castling_.wk = false;
      else if (s == 56) castling_.bq = false;
      else if (s == 63) castling_.bk = false;
    };
    touch(m.from);
    touch(m.to);

    const bool pawn_or_capture =
        kind == PieceKind::Pawn || capture ||
        (kind == PieceKind::Pawn && m.to == old_ep);
    halfmove_ = pawn_or_capture ? 0 : halfmove_ + 1;
    if (us == Color::Black) ++fullmove_;
    stm_ = them;
  }

  void generate_pseudo(std::vector<Move>& out) const {
    const Color us = stm_;
    const Color them = other(us);
    const Bitboard own = pieces(us);
    const Bitboard enemy = pieces(them);
    const Bitboard occ = own | enemy;
    const int forward = us == Color::White ? 8 : -8;
    const int start_rank = us == Color::White ? 1 : 6;
    const int promo_rank = us == Color::White ? 7 : 0;

    auto push_pawn = [&](Square from, Square to) {
      if (rank_of(to) == promo_rank) {
        for (PieceKind k : {PieceKind::Knight, PieceKind::Bishop, PieceKind::Rook, PieceKind::Queen})
          out.push_back({from, to, k});
      } else {
        out.push_back({from, to, PieceKind::None});
      }
    };

    Bitboard pawns = pieces(us, PieceKind::Pawn);
    while (pawns) {
      const Square from = pop_lsb(pawns);
      const Square one = from + forward;
      if (!(occ & bb(one))) {
        push_pawn(from, one);
        if (rank_of(from) == start_rank && !(occ & bb(one + forward)))
          out.push_back({from, one + forward, PieceKind::None});
      }
      Bitboard caps = pawn_attacks(us, from) & enemy;
      while (caps) push_pawn(from, pop_lsb(caps));
      if (ep_ != kNoSquare && (pawn_attacks(us, from) & bb(ep_)))
        out.push_back({from, ep_, PieceKind::None});
    }

    Bitboard knights = pieces(us, PieceKind::Knight);
    while (knights) {
      const Square from = pop_lsb(knights);
      Bitboard targets = knight_attacks(from) & ~own;
      while (targets) out.push_back({from, pop_lsb(targets), PieceKind::None});
    }
    Bitboard bishops = pieces(us, PieceKind::Bishop);
    while (bishops) {
      const Square from = pop_lsb(bishops);
      Bitboard targets = bishop_attacks(from, occ) & ~own;
      while (targets) out.push_back({from, pop_lsb(targets), PieceKind::None});
    }
    Bitboard rooks = pieces(us, PieceKind::Rook);
    while (rooks) {
      const Square from = pop_lsb(rooks);
      Bitboard targets = rook_attacks(from, occ) & ~own;
      while (targets) out.push_back({from, pop_lsb(targets), PieceKind::None});
    }
    Bitboard queens = pieces(us, PieceKind::Queen);
    while (queens) {
      const Square from = pop_lsb(queens);
      Bitboard targets = queen_attacks(from, occ) & ~own;
      while (targets) out.push_back({from, pop_lsb(targets), PieceKind::None});
    }

    const Square ks = king_square(us);
    Bitboard targets = king_attacks(ks) & ~own;
    while (targets) out.push_back({ks, pop_lsb(targets), PieceKind::None});

    // Castling: rights, empty path, king's path unattacked.
    const int r = us == Color::White ? 0 : 7;
    const bool can_k = us == Color::White ? castling_.wk : castling_.bk;
    const bool can_q = us == Color::White ? castling_.wq : castling_.bq;
    const Square e = make_square(4, r);
    if ((can_k || can_q) && ks == e && !is_attacked(e, them)) {
      if (can_k && board_[make_square(7, r)] == make_piece(us, PieceKind::Rook) &&
          !(occ & (bb(make_square(5, r)) | bb(make_square(6, r)))) &&
          !is_attacked(make_square(5, r), them) && !is_attacked(make_square(6, r), them))
        out.push_back({e, make_square(6, r), PieceKind::None});
      if (can_q && board_[make_square(0, r)] == make_piece(us, PieceKind::Rook) &&
          !(occ & (bb(make_square(1, r)) | bb(make_square(2, r)) | bb(make_square(3, r)))) &&
          !is_attacked(make_square(3, r), them) && !is_attacked(make_square(2, r), them))
        out.push_back({e, make_square(2, r), PieceKind::None});
    }
  }

  std::array<Piece, 64> board_{};
  std::array<Bitboard, 2> occ_{};
  std::array<Bitboard, 7> by_kind_{};
  Color stm_ = Color::White;
  CastlingRights castling_;
  Square ep_ = kNoSquare;
  int halfmove_ = 0;
  int fullmove_ = 1;
};

inline Position parse_fen(const std::string& fen) { return Position::from_fen(fen); }
inline std::string to_fen(const Position& p) { return p.to_fen(); }
inline std::vector<Move> legal_moves(const Position& p) { return p.legal_moves(); }
inline Position apply_move(const Position& p, const Move& m) { return p.apply(m); }
inline uint64_t perft(const Position& p, int depth) { return p.perft(depth); }
inline Position mirror_color(const Position& p) { return p.mirror_color(); }

}  // namespace hc::chess
