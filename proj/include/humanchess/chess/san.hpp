#pragma once

#include <string>
#include <vector>

#include "humanchess/chess/position.hpp"

namespace hc::chess {

// Resolves SAN against the legal move set, so disambiguation, checks and
// annotation suffixes never have to be re-derived from piece mechanics.
inline Move san_to_move(const std::string& san, const Position& p) {
  std::string core = san;
  while (!core.empty()) {
    const char c = core.back();
    if (c == '+' || c == '#' || c == '!' || c == '?') core.pop_back();
    else break;
  }
  if (core.empty()) throw NoSuchMove("empty SAN token");

  const auto moves = p.legal_moves();

  if (core == "O-O" || core == "0-0" || core == "O-O-O" || core == "0-0-0") {
    const bool king_side = core.size() == 3;
    const int rank = p.side_to_move() == Color::White ? 0 : 7;
    const Move want{make_square(4, rank), make_square(king_side ? 6 : 2, rank), PieceKind::None};
    for (const Move& m : moves)
      if (m == want && kind_of(p.at(m.from)) == PieceKind::King) return m;
    throw NoSuchMove("castling not legal: " + san);
  }

  PieceKind piece = PieceKind::Pawn;
  size_t i = 0;
  switch (core[0]) {
    case 'N': piece = PieceKind::Knight; ++i; break;
    case 'B': piece = PieceKind::Bishop; ++i; break;
    case 'R': piece = PieceKind::Rook; ++i; break;
    case 'Q': piece = PieceKind::Queen; ++i; break;
    case 'K': piece = PieceKind::King; ++i; break;
    default: break;
  }

  PieceKind promo = PieceKind::None;
  if (core.size() >= 2 && core[core.size() - 2] == '=') {
    switch (core.back()) {
      case 'N': promo = PieceKind::Knight; break;
      case 'B': promo = PieceKind::Bishop; break;
      case 'R': promo = PieceKind::Rook; break;
      case 'Q': promo = PieceKind::Queen; break;
      default: throw NoSuchMove("bad promotion piece: " + san);
    }
    core.resize(core.size() - 2);
  }

  std::string body = core.substr(i);
  bool is_capture = false;
  int from_file = -1, from_rank = -1;

  if (body.size() < 2) throw NoSuchMove("truncated SAN: " + san);
  auto to = parse_square(body.substr(body.size() - 2));
  if (!to) throw NoSuchMove("bad target square: " + san);
  body.resize(body.size() - 2);

  if (!body.empty() && body.back() == 'x') {
    is_capture = true;
    body.pop_back();
  }
  for (char c : body) {
    if (c >= 'a' && c <= 'h') from_file = c - 'a';
    else if (c >= '1' && c <= '8') from_rank = c - '1';
    else throw NoSuchMove("bad disambiguation: " + san);
  }

  std::vector<Move> matches;
  for (const Move& m : moves) {
    if (m.to != *to) continue;
    if (kind_of(p.at(m.from)) != piece) continue;
    if (m.promotion != promo) continue;
    if (from_file >= 0 && file_of(m.from) != from_file) continue;
    if (from_rank >= 0 && rank_of(m.from) != from_rank) continue;
    if (is_capture) {
      const bool ep = piece == PieceKind::Pawn && p.en_passant() && m.to == *p.en_passant();
      if (is_empty(p.at(m.to)) && !ep) continue;
    }
    // Lichess never omits 'x'; a bare pawn "e4" that would be a capture is rejected.
    if (!is_capture && piece == PieceKind::Pawn && file_of(m.from) != file_of(m.to)) continue;
    matches.push_back(m);
  }
  if (matches.empty()) throw NoSuchMove("no legal move matches: " + san);
  if (matches.size() > 1) throw AmbiguousSan("ambiguous SAN: " + san);
  return matches[0];
}

inline std::string to_san(const Move& m, const Position& p) {
  const PieceKind piece = kind_of(p.at(m.from));
  const Position after = p.apply(m);
  std::string suffix;
  if (after.in_check()) suffix = after.legal_moves().empty() ? "#" : "+";

  if (piece == PieceKind::King && std::abs(file_of(m.to) - file_of(m.from)) == 2)
    return (file_of(m.to) == 6 ? "O-O" : "O-O-O") + suffix;

  const bool ep = piece == PieceKind::Pawn && p.en_passant() && m.to == *p.en_passant();
  const bool capture = !is_empty(p.at(m.to)) || ep;

  std::string out;
  if (piece == PieceKind::Pawn) {
    if (capture) out = std::string(1, static_cast<char>('a' + file_of(m.from))) + "x";
  } else {
    static constexpr char kLetter[] = " PNBRQK";
    out += kLetter[static_cast<int>(piece)];
    // minimal disambiguation: file first, rank second, both as a last resort
    bool need = false, file_unique = true, rank_unique = true;
    for (const Move& o : p.legal_moves()) {
      if (o.to != m.to || o.from == m.from) continue;
      if (kind_of(p.at(o.from)) != piece) continue;
      need = true;
      if (file_of(o.from) == file_of(m.from)) file_unique = false;
      if (rank_of(o.from) == rank_of(m.from)) rank_unique = false;
    }
    if (need) {
      if (file_unique) out += static_cast<char>('a' + file_of(m.from));
      else if (rank_unique) out += static_cast<char>('1' + rank_of(m.from));
      else out += square_name(m.from);
    }
    if (capture) out += 'x';
  }
  out += square_name(m.to);
  if (m.promotion != PieceKind::None) {
    static constexpr char kPromo[] = "  NBRQ";
    out += '=';
    out += kPromo[static_cast<int>(m.promotion)];
  }
  return out + suffix;
}

}  // namespace hc::chess
