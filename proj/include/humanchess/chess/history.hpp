#pragma once

#include <deque>
#include <utility>
#include <vector>

#include "humanchess/chess/position.hpp"

namespace hc::chess {

constexpr int kHistoryPly = 12;

// Current position plus up to 12 prior (position, move) pairs, most recent
// last; replaying prior[i].second from prior[0].first reproduces current.
class PositionHistory {
 public:
  PositionHistory() : current_(Position::startpos()) {}
  explicit PositionHistory(Position root) : current_(std::move(root)) {}

  const Position& current() const { return current_; }
  const std::deque<std::pair<Position, Move>>& prior() const { return prior_; }

  void push(const Move& m) {
    Position next = current_.apply(m);
    prior_.emplace_back(std::move(current_), m);
    if (prior_.size() > kHistoryPly) prior_.pop_front();
    current_ = std::move(next);
  }

  // Position k ply before current (k = 1..prior size), if retained.
  const Position* back(int k) const {
    if (k <= 0 || k > static_cast<int>(prior_.size())) return nullptr;
    return &prior_[prior_.size() - k].first;
  }

  PositionHistory mirrored() const {
    PositionHistory h(current_.mirror_color());
    for (const auto& [pos, move] : prior_) {
      auto flip = [](Square s) { return make_square(file_of(s), 7 - rank_of(s)); };
      h.prior_.emplace_back(pos.mirror_color(), Move{flip(move.from), flip(move.to), move.promotion});
    }
    return h;
  }

 private:
  Position current_;
  std::deque<std::pair<Position, Move>> prior_;
};

}  // namespace hc::chess
