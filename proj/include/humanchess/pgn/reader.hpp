#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "humanchess/winprob/table.hpp"

namespace hc::pgn {

struct StreamCorrupt : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class GameResult : uint8_t { WhiteWin, Draw, BlackWin };

inline double result_for_white(GameResult r) {
  switch (r) {
    case GameResult::WhiteWin: return 1.0;
    case GameResult::Draw: return 0.5;
    default: return 0.0;
  }
}

// Engine score annotation: centipawns or mate distance, white's perspective.
struct EvalScore {
  bool mate = false;
  int value = 0;  // cp, or signed mate-in-n

  // Mates collapse to the +-9999 sentinel; cp values clamp into range.
  int as_cp() const {
    if (mate) return value >= 0 ? winprob::kMateCp : -winprob::kMateCp;
    return winprob::clamp_cp(value);
  }
  bool operator==(const EvalScore&) const = default;
};

struct TimedMove {
  std::string san;
  std::optional<int> clock_after;  // seconds remaining after the move
  std::optional<EvalScore> eval;   // eval of the position after the move
  bool operator==(const TimedMove&) const = default;
};

struct Date {
  int year = 0, month = 0, day = 0;
  bool operator==(const Date&) const = default;
};

struct TimeControl {
  int base = 0;       // seconds; -1 for unlimited/correspondence
  int increment = 0;  // seconds per move
  bool operator==(const TimeControl&) const = default;
};

struct GameHeader {
  int white_elo = 0;
  int black_elo = 0;
  TimeControl time_control;
  GameResult result = GameResult::Draw;
  bool has_evals = false;
  bool has_clocks = false;
  Date date;
};

struct GameRecord {
  GameHeader header;
  std::vector<TimedMove> moves;
  std::map<std::string, std::string> tags;
};

// "0:02:30" -> 150
inline std::optional<int> parse_clock(const std::string& t) {
  int parts[3] = {0, 0, 0};
  int n = 0;
  size_t i = 0;
  while (i < t.size() && n < 3) {
    if (!isdigit(static_cast<unsigned char>(t[i]))) return std::nullopt;
    int v = 0;
    while (i < t.size() && isdigit(static_cast<unsigned char>(t[i]))) v = v * 10 + (t[i++] - '0');
    parts[n++] = v;
    if (i < t.size()) {
      if (t[i] == ':') ++i;
      else if (t[i] == '.') break;  // fractional seconds are truncated
      else return std::nullopt;
    }
  }
  if (n < 2) return std::nullopt;
  return n == 3 ? parts[0] * 3600 + parts[1] * 60 + parts[2] : parts[0] * 60 + parts[1];
}

// "-1.3" -> -130 cp; "#3" / "#-3" -> mate scores
inline std::optional<EvalScore> parse_eval(const std::string& t) {
  if (t.empty()) return std::nullopt;
  try {
    if (t[0] == '#') {
      size_t pos = 0;
      const int n = std::stoi(t.substr(1), &pos);
      if (pos != t.size() - 1) return std::nullopt;
      return EvalScore{true, n};
    }
    size_t pos = 0;
    const double pawns = std::stod(t, &pos);
    if (pos != t.size()) return std::nullopt;
    return EvalScore{false, static_cast<int>(std::lround(pawns * 100.0))};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::optional<TimeControl> parse_time_control(const std::string& t) {
  if (t == "-" || t.empty()) return TimeControl{-1, 0};
  const size_t plus = t.find('+');
  try {
    if (plus == std::string::npos) return TimeControl{std::stoi(t), 0};
    return TimeControl{std::stoi(t.substr(0, plus)), std::stoi(t.substr(plus + 1))};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Streaming reader over concatenated PGN games. One game is materialized at
// a time; unparseable games are skipped and counted by reason.
class PgnReader {
 public:
  explicit PgnReader(std::istream& in) : in_(in) {}

  const std::map<std::string, uint64_t>& skip_counts() const { return skips_; }
  uint64_t games_read() const { return games_read_; }

  std::optional<GameRecord> next() {
    for (;;) {
      if (!skip_to_game_start()) return std::nullopt;
      GameRecord g;
      const char* reason = parse_one(g);
      if (!reason) {
        ++games_read_;
        return g;
      }
      ++skips_[reason];
    }
  }

 private:
  bool skip_to_game_start() {
    int c;
    while ((c = in_.peek()) != EOF) {
      if (c == '[') return true;
      if (!isspace(c)) {
        // stray movetext between games: resynchronize on the next tag line
        if (!resync()) return false;
        return true;
      }
      in_.get();
    }
    return false;
  }

  bool resync() {
    std::string line;
    while (std::getline(in_, line)) {
      if (line.rfind("[Event ", 0) == 0 || line.rfind("[Site ", 0) == 0) {
        for (auto it = line.rbegin(); it != line.rend(); ++it) in_.putback(*it);
        return true;
      }
    }
    return false;
  }

  // Returns nullptr on success, or a skip reason.
  const char* parse_one(GameRecord& g) {
    // tag section
    while (in_.peek() == '[') {
      std::string line;
      if (!std::getline(in_, line)) return "truncated_header";
      const size_t key_end = line.find(' ');
      const size_t q1 = line.find('"');
      const size_t q2 = line.rfind('"');
      if (key_end == std::string::npos || q1 == std::string::npos || q2 <= q1 ||
          line.back() != ']')
        return "malformed_tag";
      g.tags[line.substr(1, key_end - 1)] = line.substr(q1 + 1, q2 - q1 - 1);
      skip_blank_space_only();
    }
    if (g.tags.empty()) return "malformed_tag";

    // movetext section
    bool saw_result = false;
    std::string result_token;
    while (!saw_result) {
      const int c = in_.peek();
      if (c == EOF) return "missing_result";
      if (c == '[') {
        // next game's tags began without a result token
        return "missing_result";
      }
      if (isspace(c)) {
        in_.get();
        continue;
      }
      if (c == '{') {
        std::string comment;
        if (!read_comment(comment)) throw StreamCorrupt("unterminated comment at end of stream");
        if (!g.moves.empty()) attach_commands(comment, g.moves.back());
        continue;
      }
      if (c == '(') {
        if (!skip_variation()) throw StreamCorrupt("unterminated variation at end of stream");
        continue;
      }
      if (c == ';') {
        std::string line;
        std::getline(in_, line);
        continue;
      }
      if (c == '$') {
        in_.get();
        while (isdigit(in_.peek())) in_.get();
        continue;
      }
      std::string token = read_token();
      if (token.empty()) continue;
      if (token == "1-0" || token == "0-1" || token == "1/2-1/2" || token == "*") {
        saw_result = true;
        result_token = token;
      } else if (isdigit(static_cast<unsigned char>(token[0]))) {
        // move number like "12." or "12..."
        continue;
      } else {
        g.moves.push_back(TimedMove{token, std::nullopt, std::nullopt});
      }
    }

    // typed header
    auto tag = [&](const char* k) -> const std::string* {
      auto it = g.tags.find(k);
      return it == g.tags.end() ? nullptr : &it->second;
    };
    if (const auto* v = tag("Variant"); v && *v != "Standard") return "variant";
    if (tag("FEN") || tag("SetUp")) return "setup_position";

    auto parse_elo = [&](const char* k, int& out) {
      const auto* v = tag(k);
      if (!v || v->empty() || *v == "?") return false;
      try {
        out = std::stoi(*v);
      } catch (const std::exception&) {
        return false;
      }
      return out > 0;
    };
    if (!parse_elo("WhiteElo", g.header.white_elo) ||
        !parse_elo("BlackElo", g.header.black_elo))
      return "missing_rating";

    const std::string result = tag("Result") ? *tag("Result") : result_token;
    if (result == "1-0") g.header.result = GameResult::WhiteWin;
    else if (result == "0-1") g.header.result = GameResult::BlackWin;
    else if (result == "1/2-1/2") g.header.result = GameResult::Draw;
    else return "unfinished";

    if (const auto* v = tag("TimeControl")) {
      auto tc = parse_time_control(*v);
      if (!tc) return "bad_time_control";
      g.header.time_control = *tc;
    } else {
      g.header.time_control = TimeControl{-1, 0};
    }

    const auto* date = tag("UTCDate") ? tag("UTCDate") : tag("Date");
    if (date && date->size() == 10) {
      try {
        g.header.date = {std::stoi(date->substr(0, 4)), std::stoi(date->substr(5, 2)),
                         std::stoi(date->substr(8, 2))};
      } catch (const std::exception&) {
      }
    }

    for (const auto& m : g.moves) {
      if (m.eval) g.header.has_evals = true;
      if (m.clock_after) g.header.has_clocks = true;
    }
    return nullptr;
  }

  void skip_blank_space_only() {
    while (in_.peek() == '\n' || in_.peek() == '\r') in_.get();
  }

  bool read_comment(std::string& out) {
    in_.get();  // '{'
    int c;
    while ((c = in_.get()) != EOF) {
      if (c == '}') return true;
      out += static_cast<char>(c);
    }
    return false;
  }

  bool skip_variation() {
    in_.get();  // '('
    int depth = 1;
    int c;
    while ((c = in_.get()) != EOF) {
      if (c == '(') ++depth;
      else if (c == ')' && --depth == 0) return true;
      else if (c == '{') {
        std::string ignored;
        if (!read_comment_body(ignored)) return false;
      }
    }
    return false;
  }

  bool read_comment_body(std::string& out) {
    int c;
    while ((c = in_.get()) != EOF) {
      if (c == '}') return true;
      out += static_cast<char>(c);
    }
    return false;
  }

  std::string read_token() {
    std::string t;
    int c;
    while ((c = in_.peek()) != EOF && !isspace(c) && c != '{' && c != '(' && c != ')' && c != ';')
      t += static_cast<char>(in_.get());
    return t;
  }

  // [%clk 0:02:30] and [%eval -1.3] commands inside a comment
  static void attach_commands(const std::string& comment, TimedMove& move) {
    size_t i = 0;
    while ((i = comment.find("[%", i)) != std::string::npos) {
      const size_t end = comment.find(']', i);
      if (end == std::string::npos) break;
      const std::string body = comment.substr(i + 2, end - i - 2);
      const size_t sp = body.find(' ');
      if (sp != std::string::npos) {
        const std::string cmd = body.substr(0, sp);
        const std::string arg = body.substr(sp + 1);
        if (cmd == "clk") {
          if (auto v = parse_clock(arg)) move.clock_after = *v;
        } else if (cmd == "eval") {
          if (auto v = parse_eval(arg)) move.eval = *v;
        }
      }
      i = end + 1;
    }
  }

  std::istream& in_;
  std::map<std::string, uint64_t> skips_;
  uint64_t games_read_ = 0;
};

}  // namespace hc::pgn
