#pragma once

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "humanchess/model/policy.hpp"

namespace hc::engine {

// UCI front end for a trained policy checkpoint. No search: "go" answers
// instantly with the policy argmax over legal moves and ignores all time
// controls. The position history window is capped at 12 ply by construction.
class UciServer {
 public:
  explicit UciServer(model::PolicyModel model) : model_(std::move(model)) {}

  void serve(std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
      if (!handle(line, out)) break;
    }
  }

  bool handle(const std::string& line, std::ostream& out) {
    std::istringstream in(line);
    std::string cmd;
    if (!(in >> cmd)) return true;

    if (cmd == "uci") {
      out << "id name humanchess-policy\n";
      out << "id author humanchess\n";
      out << "option name MultiPV type spin default 1 min 1 max 64\n";
      out << "uciok" << std::endl;
    } else if (cmd == "isready") {
      out << "readyok" << std::endl;
    } else if (cmd == "ucinewgame") {
      history_ = chess::PositionHistory();
    } else if (cmd == "setoption") {
      std::string tok, name_word, value_word;
      std::string name, value;
      in >> name_word;  // "name"
      while (in >> tok && tok != "value") name += (name.empty() ? "" : " ") + tok;
      while (in >> tok) value += (value.empty() ? "" : " ") + tok;
      if (name == "MultiPV") {
        try {
          multipv_ = std::clamp(std::stoi(value), 1, 64);
        } catch (const std::exception&) {
          out << "info string error bad MultiPV value" << std::endl;
        }
      }
    } else if (cmd == "position") {
      if (!set_position(in, out)) return true;
    } else if (cmd == "go") {
      go(out);
    } else if (cmd == "stop") {
      // searches are instantaneous; nothing to interrupt
    } else if (cmd == "quit") {
      return false;
    } else {
      out << "info string error unknown command " << cmd << std::endl;
    }
    return true;
  }

 private:
  bool set_position(std::istringstream& in, std::ostream& out) {
    std::string tok;
    in >> tok;
    try {
      if (tok == "startpos") {
        history_ = chess::PositionHistory();
        in >> tok;  // optional "moves"
      } else if (tok == "fen") {
        std::string fen, part;
        int fields = 0;
        while (fields < 6 && in >> part) {
          if (part == "moves") break;
          fen += (fen.empty() ? "" : " ") + part;
          ++fields;
        }
        history_ = chess::PositionHistory(chess::Position::from_fen(fen));
        if (part != "moves") in >> tok;
        else tok = "moves";
      } else {
        out << "info string error bad position command" << std::endl;
        return false;
      }
      std::string move_text;
      while (in >> move_text) {
        auto m = chess::parse_uci(move_text);
        if (!m || !history_.current().is_legal(*m)) {
          out << "info string error illegal move " << move_text << std::endl;
          return false;
        }
        history_.push(*m);
      }
      return true;
    } catch (const std::exception& e) {
      out << "info string error " << e.what() << std::endl;
      return false;
    }
  }

  void go(std::ostream& out) {
    if (history_.current().legal_moves().empty()) {
      out << "info string error no legal moves" << std::endl;
      out << "bestmove 0000" << std::endl;
      return;
    }
    auto [best, dist] = model_.predict_move(history_);
    std::stable_sort(dist.begin(), dist.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    const int k = std::min<int>(multipv_, static_cast<int>(dist.size()));
    for (int i = 0; i < k; ++i) {
      // policy confidence scaled to a pseudo-centipawn score; ranking only
      out << "info depth 1 multipv " << (i + 1) << " score cp "
          << static_cast<int>(std::lround(
                 1000.0 * dist[i].second)) << " pv " << chess::to_uci(dist[i].first) << '\n';
    }
    out << "bestmove " << chess::to_uci(best) << std::endl;
  }

  model::PolicyModel model_;
  chess::PositionHistory history_;
  int multipv_ = 1;
};

}  // namespace hc::engine
