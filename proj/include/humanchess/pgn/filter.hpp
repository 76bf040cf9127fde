#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "humanchess/chess/history.hpp"
#include "humanchess/chess/san.hpp"
#include "humanchess/pgn/reader.hpp"

namespace hc::pgn {

struct ReplayFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class TimeFormat : uint8_t { HyperBullet, Bullet, Blitz, Rapid, Classical };

inline const char* format_name(TimeFormat f) {
  switch (f) {
    case TimeFormat::HyperBullet: return "hyperbullet";
    case TimeFormat::Bullet: return "bullet";
    case TimeFormat::Blitz: return "blitz";
    case TimeFormat::Rapid: return "rapid";
    default: return "classical";
  }
}

// Estimated game duration is base + 40 * increment seconds.
inline int estimated_duration(TimeControl tc) {
  if (tc.base < 0) return 1 << 30;
  return tc.base + 40 * tc.increment;
}

inline TimeFormat classify_time_control(TimeControl tc) {
  const int est = estimated_duration(tc);
  if (est < 60) return TimeFormat::HyperBullet;
  if (est < 180) return TimeFormat::Bullet;
  if (est < 480) return TimeFormat::Blitz;
  if (est < 900) return TimeFormat::Rapid;
  return TimeFormat::Classical;
}

struct RatingBin {
  int lower = 0;  // multiple of 100, width 100

  bool operator==(const RatingBin&) const = default;
  bool contains(int rating) const { return rating >= lower && rating < lower + 100; }
};

inline RatingBin bin_of(int rating) { return RatingBin{rating / 100 * 100}; }

// The shared 100-wide bin when both players fall into the same one.
inline std::optional<RatingBin> bin_for_game(const GameHeader& h) {
  if (h.white_elo / 100 != h.black_elo / 100) return std::nullopt;
  return bin_of(h.white_elo);
}

// How the low-clock cutoff is applied:
//   MoverOnly        drop a move when the mover is at or under the cutoff
//   EitherRestOfGame additionally drop everything after either player first
//                    reaches the cutoff (training-set convention)
enum class ClockCutoffMode : uint8_t { MoverOnly, EitherRestOfGame };

struct FilterPolicy {
  int min_estimated_duration = 180;  // excludes Bullet and HyperBullet
  int min_clock = 30;                // seconds; 0 disables the rule
  int skip_opening_ply = 10;
  bool require_same_bin = false;
  bool require_evals = false;
  ClockCutoffMode cutoff_mode = ClockCutoffMode::EitherRestOfGame;
};

// One human decision: the position (with up to 12 ply of context), the move
// that was played, and the observable circumstances.
struct MoveInstance {
  chess::PositionHistory history;
  chess::Move played;
  int mover_rating = 0;
  float mover_clock_fraction = 1.0f;
  float opponent_clock_fraction = 1.0f;
  std::optional<int> eval_before;  // cp, white's perspective, sentinel-mapped
  std::optional<int> eval_after;
  double result_for_mover = 0.5;  // 0, 0.5, 1
  int ply_index = 0;              // 1-based
  uint8_t blunder_label = 255;    // 0, 1, 255 = unlabeled

  chess::Color mover() const { return history.current().side_to_move(); }
};

struct ExtractStats {
  const char* game_skip = nullptr;  // reason the whole game produced nothing
  int emitted = 0;
  int dropped_opening = 0;
  int dropped_clock = 0;
};

inline std::vector<MoveInstance> extract_instances(const GameRecord& g, const FilterPolicy& policy,
                                                   ExtractStats* stats = nullptr) {
  ExtractStats local;
  ExtractStats& st = stats ? *stats : local;
  st = ExtractStats{};

  if (estimated_duration(g.header.time_control) < policy.min_estimated_duration) {
    st.game_skip = "fast_time_control";
    return {};
  }
  if (policy.require_same_bin && !bin_for_game(g.header)) {
    st.game_skip = "different_bins";
    return {};
  }
  if (policy.require_evals && !g.header.has_evals) {
    st.game_skip = "missing_evals";
    return {};
  }
  if (policy.min_clock > 0 && !g.header.has_clocks) {
    st.game_skip = "missing_clocks";
    return {};
  }

  const double base = g.header.time_control.base > 0 ? g.header.time_control.base : 0.0;
  double remaining[2] = {base, base};
  bool cutoff_tripped = false;
  std::optional<int> prev_eval_after;

  std::vector<MoveInstance> out;
  chess::PositionHistory history;
  int ply = 0;
  for (const TimedMove& tm : g.moves) {
    ++ply;
    const chess::Color mover = history.current().side_to_move();
    const chess::Color opp = chess::other(mover);

    chess::Move move;
    try {
      move = chess::san_to_move(tm.san, history.current());
    } catch (const std::exception& e) {
      throw ReplayFailure("ply " + std::to_string(ply) + ": " + e.what());
    }

    const double mover_before = remaining[static_cast<int>(mover)];
    const bool in_opening = ply <= policy.skip_opening_ply;
    const bool under_clock =
        policy.min_clock > 0 &&
        (mover_before <= policy.min_clock ||
         (policy.cutoff_mode == ClockCutoffMode::EitherRestOfGame && cutoff_tripped));

    if (in_opening) {
      ++st.dropped_opening;
    } else if (under_clock) {
      ++st.dropped_clock;
    } else {
      MoveInstance inst;
      inst.history = history;
      inst.played = move;
      inst.mover_rating = mover == chess::Color::White ? g.header.white_elo : g.header.black_elo;
      if (base > 0) {
        inst.mover_clock_fraction =
            static_cast<float>(std::clamp(mover_before / base, 0.0, 1.0));
        inst.opponent_clock_fraction = static_cast<float>(
            std::clamp(remaining[static_cast<int>(opp)] / base, 0.0, 1.0));
      }
      inst.eval_before = prev_eval_after;
      if (tm.eval) inst.eval_after = tm.eval->as_cp();
      const double rw = result_for_white(g.header.result);
      inst.result_for_mover = mover == chess::Color::White ? rw : 1.0 - rw;
      inst.ply_index = ply;
      out.push_back(std::move(inst));
      ++st.emitted;
    }

    history.push(move);
    if (tm.clock_after) {
      remaining[static_cast<int>(mover)] = *tm.clock_after;
      if (policy.min_clock > 0 && *tm.clock_after <= policy.min_clock) cutoff_tripped = true;
    } else {
      remaining[static_cast<int>(mover)] =
          mover_before + g.header.time_control.increment;  // no usage information
    }
    prev_eval_after = tm.eval ? std::optional<int>(tm.eval->as_cp()) : std::nullopt;
  }
  return out;
}

}  // namespace hc::pgn
