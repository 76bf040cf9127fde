#pragma once

#include <map>
#include <memory>
#include <sstream>

#include "humanchess/engine/subprocess.hpp"
#include "humanchess/eval/predictor.hpp"
#include "humanchess/pgn/reader.hpp"  // EvalScore

namespace hc::engine {

struct HandshakeTimeout : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SearchTimeout : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScoredMove {
  chess::Move move;
  pgn::EvalScore score;  // side to move's perspective
};

struct EvalResult {
  std::vector<ScoredMove> ranked;  // multipv order, best first
  chess::Move bestmove;
};

// UCI client over a child engine process: handshake, options, depth-limited
// MultiPV evaluation. One in-flight search per handle.
class EngineHandle {
 public:
  explicit EngineHandle(const std::string& path, const std::vector<std::string>& args = {},
                        const std::map<std::string, std::string>& options = {},
                        int handshake_timeout_ms = 10000)
      : proc_(path, args) {
    proc_.write_line("uci");
    wait_for("uciok", handshake_timeout_ms, HandshakeKind::Handshake);
    // reproducible search defaults unless the caller overrides them
    std::map<std::string, std::string> opts = {{"Threads", "1"}, {"Hash", "16"}};
    for (const auto& [k, v] : options) opts[k] = v;
    for (const auto& [k, v] : opts) proc_.write_line("setoption name " + k + " value " + v);
    proc_.write_line("isready");
    wait_for("readyok", handshake_timeout_ms, HandshakeKind::Handshake);
  }

  EvalResult evaluate(const chess::Position& p, int depth, int multipv = 1,
                      int timeout_ms = 60000) {
    if (multipv != multipv_) {
      proc_.write_line("setoption name MultiPV value " + std::to_string(multipv));
      multipv_ = multipv;
    }
    proc_.write_line("position fen " + p.to_fen());
    proc_.write_line("go depth " + std::to_string(depth));

    std::map<int, ScoredMove> ranked;
    const auto legal = p.legal_moves();
    for (;;) {
      auto line = proc_.read_line(timeout_ms);
      if (!line) throw SearchTimeout("no engine output within the timeout");
      std::istringstream in(*line);
      std::string tok;
      in >> tok;
      if (tok == "bestmove") {
        std::string best;
        in >> best;
        EvalResult result;
        auto bm = chess::parse_uci(best);
        if (best != "(none)" && best != "0000") {
          if (!bm) throw ParseError("unparseable bestmove: " + *line);
          if (std::find(legal.begin(), legal.end(), *bm) == legal.end())
            throw ParseError("engine bestmove is illegal: " + best);
          result.bestmove = *bm;
        }
        for (auto& [rank, sm] : ranked) result.ranked.push_back(sm);
        if (result.ranked.empty() && bm) {
          result.ranked.push_back({*bm, pgn::EvalScore{}});
        }
        return result;
      }
      if (tok != "info") continue;
      parse_info(in, legal, ranked);
    }
  }

 private:
  enum class HandshakeKind { Handshake };

  void wait_for(const std::string& token, int timeout_ms, HandshakeKind) {
    for (;;) {
      auto line = proc_.read_line(timeout_ms);
      if (!line) throw HandshakeTimeout("engine did not answer with " + token);
      if (*line == token) return;
    }
  }

  static void parse_info(std::istringstream& in, const std::vector<chess::Move>& legal,
                         std::map<int, ScoredMove>& ranked) {
    int rank = 1;
    std::optional<pgn::EvalScore> score;
    std::optional<chess::Move> first_pv;
    std::string tok;
    while (in >> tok) {
      if (tok == "multipv") {
        in >> rank;
      } else if (tok == "score") {
        std::string kind;
        int value;
        if (!(in >> kind >> value)) return;
        if (kind == "cp") score = pgn::EvalScore{false, value};
        else if (kind == "mate") score = pgn::EvalScore{true, value};
        else return;
      } else if (tok == "pv") {
        std::string move_text;
        if (in >> move_text) {
          auto m = chess::parse_uci(move_text);
          if (!m) throw ParseError("unparseable pv move: " + move_text);
          first_pv = *m;
        }
        break;  // pv is the last field
      }
    }
    if (!score || !first_pv) return;  // progress chatter without a pv line
    if (std::find(legal.begin(), legal.end(), *first_pv) == legal.end())
      throw ParseError("engine pv move is illegal: " + chess::to_uci(*first_pv));
    ranked[rank] = ScoredMove{*first_pv, *score};
  }

  Subprocess proc_;
  int multipv_ = 1;
};

class EnginePredictor : public eval::Predictor {
 public:
  EnginePredictor(EngineHandle& handle, int depth, std::string name)
      : handle_(handle), depth_(depth), name_(std::move(name)) {}

  chess::Move predict(const chess::PositionHistory& h) override {
    EvalResult r = handle_.evaluate(h.current(), depth_, 1);
    if (r.bestmove == chess::kNullMove) throw EngineDied("engine returned no move");
    return r.bestmove;
  }
  std::string name() const override { return name_; }

 private:
  EngineHandle& handle_;
  int depth_;
  std::string name_;
};

}  // namespace hc::engine
