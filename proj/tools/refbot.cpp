// Minimal conformant UCI engine over a depth-limited material search.
// Serves as a reproducible reference opponent and evaluator: single thread,
// no randomness, MultiPV at the root.

#include <algorithm>
#include <iostream>
#include <sstream>
#include <string>

#include "humanchess/chess/position.hpp"
#include "humanchess/eval/synthetic.hpp"

using namespace hc;

namespace {

int g_multipv = 1;
int g_default_depth = 2;
chess::Position g_position = chess::Position::startpos();

void emit_score(std::ostream& out, int score) {
  constexpr int kThreshold = eval::kMateScore - 1000;
  if (score > kThreshold) {
    out << "score mate " << (eval::kMateScore - score + 2) / 2;
  } else if (score < -kThreshold) {
    out << "score mate -" << (eval::kMateScore + score + 2) / 2;
  } else {
    out << "score cp " << score;
  }
}

void go(std::istringstream& in, std::ostream& out) {
  int depth = g_default_depth;
  std::string tok;
  while (in >> tok) {
    if (tok == "depth" && (in >> tok)) depth = std::clamp(std::stoi(tok), 1, 5);
  }
  const auto ranked = eval::rank_moves(g_position, depth);
  if (ranked.empty()) {
    out << "bestmove 0000" << std::endl;
    return;
  }
  const int k = std::min<int>(g_multipv, static_cast<int>(ranked.size()));
  for (int i = 0; i < k; ++i) {
    out << "info depth " << depth << " multipv " << (i + 1) << ' ';
    emit_score(out, ranked[i].score);
    out << " pv " << chess::to_uci(ranked[i].move) << '\n';
  }
  out << "bestmove " << chess::to_uci(ranked[0].move) << std::endl;
}

void set_position(std::istringstream& in, std::ostream& out) {
  std::string tok;
  in >> tok;
  try {
    if (tok == "startpos") {
      g_position = chess::Position::startpos();
      in >> tok;
    } else if (tok == "fen") {
      std::string fen, part;
      int fields = 0;
      while (fields < 6 && in >> part) {
        if (part == "moves") break;
        fen += (fen.empty() ? "" : " ") + part;
        ++fields;
      }
      g_position = chess::Position::from_fen(fen);
      if (part != "moves") in >> tok;
    }
    std::string move_text;
    while (in >> move_text) {
      auto m = chess::parse_uci(move_text);
      if (!m) throw std::runtime_error("bad move " + move_text);
      g_position = g_position.apply(*m);
    }
  } catch (const std::exception& e) {
    out << "info string error " << e.what() << std::endl;
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_default_depth = std::clamp(std::atoi(argv[1]), 1, 5);
  std::string line;
  while (std::getline(std::cin, line)) {
    std::istringstream in(line);
    std::string cmd;
    if (!(in >> cmd)) continue;
    if (cmd == "uci") {
      std::cout << "id name refbot\nid author humanchess\n"
                << "option name MultiPV type spin default 1 min 1 max 64\n"
                << "option name Threads type spin default 1 min 1 max 1\n"
                << "option name Hash type spin default 16 min 1 max 1024\n"
                << "uciok" << std::endl;
    } else if (cmd == "isready") {
      std::cout << "readyok" << std::endl;
    } else if (cmd == "setoption") {
      std::string tok, name, value;
      in >> tok;  // name
      while (in >> tok && tok != "value") name += (name.empty() ? "" : " ") + tok;
      while (in >> tok) value += (value.empty() ? "" : " ") + tok;
      if (name == "MultiPV") {
        try {
          g_multipv = std::clamp(std::stoi(value), 1, 64);
        } catch (const std::exception&) {
        }
      }
    } else if (cmd == "ucinewgame") {
      g_position = chess::Position::startpos();
    } else if (cmd == "position") {
      set_position(in, std::cout);
    } else if (cmd == "go") {
      go(in, std::cout);
    } else if (cmd == "quit") {
      break;
    }
  }
  return 0;
}
