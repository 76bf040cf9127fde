#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "humanchess/pgn/reader.hpp"

namespace hc::pgn {

inline std::string format_clock(int seconds) {
  const int h = seconds / 3600, m = (seconds % 3600) / 60, s = seconds % 60;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%d:%02d:%02d", h, m, s);
  return buf;
}

inline std::string format_eval(const EvalScore& e) {
  if (e.mate) return "#" + std::to_string(e.value);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", e.value / 100.0);
  return buf;
}

inline const char* result_text(GameResult r) {
  switch (r) {
    case GameResult::WhiteWin: return "1-0";
    case GameResult::Draw: return "1/2-1/2";
    default: return "0-1";
  }
}

// Lichess-export style: seven-tag-ish header then movetext with one
// {[%eval ..] [%clk ..]} comment per annotated move.
inline void write_game(const GameRecord& g, std::ostream& out) {
  // Event first, then the remaining tags alphabetically.
  if (auto it = g.tags.find("Event"); it != g.tags.end())
    out << "[Event \"" << it->second << "\"]\n";
  for (const auto& [key, value] : g.tags) {
    if (key == "Event") continue;
    out << '[' << key << " \"" << value << "\"]\n";
  }
  out << '\n';

  std::string line;
  auto emit = [&](const std::string& tok) {
    if (line.empty()) {
      line = tok;
    } else if (line.size() + 1 + tok.size() > 80) {
      out << line << '\n';
      line = tok;
    } else {
      line += ' ';
      line += tok;
    }
  };

  int ply = 0;
  for (const TimedMove& m : g.moves) {
    if (ply % 2 == 0) emit(std::to_string(ply / 2 + 1) + ".");
    emit(m.san);
    if (m.eval || m.clock_after) {
      std::string c = "{";
      if (m.eval) c += " [%eval " + format_eval(*m.eval) + "]";
      if (m.clock_after) c += " [%clk " + format_clock(*m.clock_after) + "]";
      c += " }";
      emit(c);
    }
    ++ply;
  }
  emit(result_text(g.header.result));
  if (!line.empty()) out << line << '\n';
  out << '\n';
}

}  // namespace hc::pgn
