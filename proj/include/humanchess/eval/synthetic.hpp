#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "humanchess/eval/predictor.hpp"
#include "humanchess/util/rng.hpp"

namespace hc::eval {

// Material-plus-tempo evaluation in centipawns from white's perspective.
// The tempo term makes the initial position worth +20 for white.
constexpr int kPieceValue[7] = {0, 100, 320, 330, 500, 900, 0};
constexpr int kTempoCp = 20;
constexpr int kMateScore = 30000;

inline int material_eval_white(const chess::Position& p) {
  using namespace chess;
  int score = 0;
  for (Square s = 0; s < 64; ++s) {
    const Piece pc = p.at(s);
    if (is_empty(pc)) continue;
    const int v = kPieceValue[static_cast<int>(kind_of(pc))];
    score += color_of(pc) == Color::White ? v : -v;
  }
  return score + (p.side_to_move() == chess::Color::White ? kTempoCp : -kTempoCp);
}

inline int eval_for_mover(const chess::Position& p) {
  const int w = material_eval_white(p);
  return p.side_to_move() == chess::Color::White ? w : -w;
}

// Negamax with alpha-beta; mate scores shrink with distance so faster mates
// rank higher. Depth 0 evaluates statically.
inline int negamax(const chess::Position& p, int depth, int alpha, int beta) {
  auto moves = p.legal_moves();
  if (moves.empty()) return p.in_check() ? -kMateScore : 0;
  if (depth == 0) return eval_for_mover(p);
  int best = -std::numeric_limits<int>::max();
  for (const chess::Move& m : moves) {
    const int score = -negamax(p.apply(m), depth - 1, -beta, -alpha);
    if (score > best) best = score;
    if (best > alpha) alpha = best;
    if (alpha >= beta) break;
  }
  return best > kMateScore - 1000 ? best - 1 : (best < -kMateScore + 1000 ? best + 1 : best);
}

struct RankedMove {
  chess::Move move;
  int score = 0;  // side to move's perspective
};

// Every root move scored at fixed depth, best first; ties keep the
// deterministic legal-move order.
inline std::vector<RankedMove> rank_moves(const chess::Position& p, int depth) {
  std::vector<RankedMove> out;
  for (const chess::Move& m : p.legal_moves()) {
    const int score =
        -negamax(p.apply(m), depth - 1, -std::numeric_limits<int>::max(), std::numeric_limits<int>::max());
    out.push_back({m, score});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedMove& a, const RankedMove& b) { return a.score > b.score; });
  return out;
}

// Depth-limited material searcher with epsilon-uniform noise. depth 1 is the
// one-ply material-greedy player.
class NoisySearchPolicy : public Predictor {
 public:
  NoisySearchPolicy(int depth, double epsilon, uint64_t seed, std::string name)
      : depth_(depth), epsilon_(epsilon), rng_(seed), name_(std::move(name)) {}

  chess::Move predict(const chess::PositionHistory& history) override {
    const auto& p = history.current();
    auto moves = p.legal_moves();
    if (moves.empty()) throw std::runtime_error("no legal moves to predict");
    if (epsilon_ > 0.0 && rng_.next_double() < epsilon_)
      return moves[rng_.next_below(moves.size())];
    return rank_moves(p, depth_).front().move;
  }

  std::string name() const override { return name_; }

 private:
  int depth_;
  double epsilon_;
  Rng rng_;
  std::string name_;
};

class UniformRandomPolicy : public Predictor {
 public:
  explicit UniformRandomPolicy(uint64_t seed) : rng_(seed) {}

  chess::Move predict(const chess::PositionHistory& history) override {
    auto moves = history.current().legal_moves();
    if (moves.empty()) throw std::runtime_error("no legal moves to predict");
    return moves[rng_.next_below(moves.size())];
  }

  std::string name() const override { return "uniform-random"; }

 private:
  Rng rng_;
};

}  // namespace hc::eval
