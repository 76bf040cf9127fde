#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace hc::chess {

// Squares are 0..63, a1 = 0, h8 = 63 (file + 8*rank).
using Square = int;

constexpr Square kNoSquare = -1;

constexpr int file_of(Square s) { return s & 7; }
constexpr int rank_of(Square s) { return s >> 3; }
constexpr Square make_square(int file, int rank) { return rank * 8 + file; }
constexpr bool square_ok(Square s) { return s >= 0 && s < 64; }

inline std::string square_name(Square s) {
  return {static_cast<char>('a' + file_of(s)), static_cast<char>('1' + rank_of(s))};
}

inline std::optional<Square> parse_square(std::string_view t) {
  if (t.size() != 2 || t[0] < 'a' || t[0] > 'h' || t[1] < '1' || t[1] > '8') return std::nullopt;
  return make_square(t[0] - 'a', t[1] - '1');
}

enum class Color : uint8_t { White = 0, Black = 1 };

constexpr Color other(Color c) { return c == Color::White ? Color::Black : Color::White; }

enum class PieceKind : uint8_t { None = 0, Pawn, Knight, Bishop, Rook, Queen, King };

// Piece codes: 0 empty, kind | (color << 3).
using Piece = uint8_t;

constexpr Piece kEmpty = 0;

constexpr Piece make_piece(Color c, PieceKind k) {
  return static_cast<Piece>(static_cast<uint8_t>(k) | (static_cast<uint8_t>(c) << 3));
}
constexpr PieceKind kind_of(Piece p) { return static_cast<PieceKind>(p & 7); }
constexpr Color color_of(Piece p) { return static_cast<Color>(p >> 3); }
constexpr bool is_empty(Piece p) { return p == kEmpty; }

inline char piece_char(Piece p) {
  static constexpr char kWhite[] = " PNBRQK";
  char c = kWhite[static_cast<int>(kind_of(p))];
  return color_of(p) == Color::Black ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::optional<Piece> piece_from_char(char c) {
  const Color color = (c >= 'a') ? Color::Black : Color::White;
  switch (c >= 'a' ? static_cast<char>(c - 'a' + 'A') : c) {
    case 'P': return make_piece(color, PieceKind::Pawn);
    case 'N': return make_piece(color, PieceKind::Knight);
    case 'B': return make_piece(color, PieceKind::Bishop);
    case 'R': return make_piece(color, PieceKind::Rook);
    case 'Q': return make_piece(color, PieceKind::Queen);
    case 'K': return make_piece(color, PieceKind::King);
    default: return std::nullopt;
  }
}

// Castling is encoded as the king's two-square move (e1g1 etc.).
struct Move {
  Square from = kNoSquare;
  Square to = kNoSquare;
  PieceKind promotion = PieceKind::None;

  constexpr bool operator==(const Move&) const = default;

  // Total order used everywhere legal move lists must be deterministic.
  constexpr auto key() const {
    return (from * 64 + to) * 8 + static_cast<int>(promotion);
  }
  constexpr bool operator<(const Move& o) const { return key() < o.key(); }
};

constexpr Move kNullMove{};

inline std::string to_uci(const Move& m) {
  std::string s = square_name(m.from) + square_name(m.to);
  if (m.promotion != PieceKind::None) {
    static constexpr char kPromo[] = "  nbrq";
    s += kPromo[static_cast<int>(m.promotion)];
  }
  return s;
}

inline std::optional<Move> parse_uci(std::string_view t) {
  if (t.size() < 4 || t.size() > 5) return std::nullopt;
  auto from = parse_square(t.substr(0, 2));
  auto to = parse_square(t.substr(2, 2));
  if (!from || !to) return std::nullopt;
  Move m{*from, *to, PieceKind::None};
  if (t.size() == 5) {
    switch (t[4]) {
      case 'n': m.promotion = PieceKind::Knight; break;
      case 'b': m.promotion = PieceKind::Bishop; break;
      case 'r': m.promotion = PieceKind::Rook; break;
      case 'q': m.promotion = PieceKind::Queen; break;
      default: return std::nullopt;
    }
  }
  return m;
}

struct MalformedFen : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IllegalPosition : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IllegalMove : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AmbiguousSan : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoSuchMove : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hc::chess
