#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "humanchess/chess/san.hpp"
#include "humanchess/eval/synthetic.hpp"
#include "humanchess/pgn/writer.hpp"
#include "humanchess/util/rng.hpp"

namespace hc::synth {

// Deterministic generator of Lichess-export-shaped PGN corpora. Games are
// played out by the noisy material policies, with simulated clocks, material
// evals, mate annotations, and a sprinkling of the framing oddities real
// archives contain (NAGs, variations, missing ratings, variant games).
struct CorpusConfig {
  int games = 100;
  uint64_t seed = 1;
  double eval_fraction = 0.6;       // games carrying [%eval] annotations
  double no_clock_fraction = 0.02;  // games without [%clk] annotations
  double variant_fraction = 0.01;
  double missing_elo_fraction = 0.01;
  double empty_game_fraction = 0.005;
  int first_year = 2019;
  int years = 1;
  int max_plies = 160;
  bool fast_policies = false;  // depth-1 players only; cheap bulk corpora
};

namespace detail {

struct TcChoice {
  int base, increment, weight;
  const char* event;
};

inline const TcChoice kTimeControls[] = {
    {30, 0, 5, "Rated HyperBullet game"}, {60, 0, 10, "Rated Bullet game"},
    {180, 0, 30, "Rated Blitz game"},     {180, 2, 15, "Rated Blitz game"},
    {300, 3, 20, "Rated Blitz game"},     {600, 0, 15, "Rated Rapid game"},
    {900, 10, 5, "Rated Classical game"},
};

inline std::string random_game_id(Rng& rng) {
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::string id;
  for (int i = 0; i < 8; ++i) id += kAlphabet[rng.next_below(62)];
  return id;
}

}  // namespace detail

inline pgn::GameRecord generate_game(const CorpusConfig& cfg, Rng& rng) {
  using namespace hc::chess;
  pgn::GameRecord g;

  int total_weight = 0;
  for (const auto& tc : detail::kTimeControls) total_weight += tc.weight;
  int pick = static_cast<int>(rng.next_below(total_weight));
  const detail::TcChoice* tc = &detail::kTimeControls[0];
  for (const auto& choice : detail::kTimeControls) {
    if (pick < choice.weight) {
      tc = &choice;
      break;
    }
    pick -= choice.weight;
  }

  const int white_elo = 800 + static_cast<int>(rng.next_below(1700));
  const int black_elo = rng.next_double() < 0.8
                            ? white_elo / 100 * 100 + static_cast<int>(rng.next_below(100))
                            : std::clamp(white_elo + static_cast<int>(rng.next_below(401)) - 200,
                                         800, 2499);

  auto make_policy = [&](int rating) -> eval::NoisySearchPolicy {
    if (cfg.fast_policies) return {1, rating < 1500 ? 0.35 : 0.1, rng.next_u64(), "greedy"};
    if (rating < 1500) return {1, 0.35, rng.next_u64(), "greedy"};
    return {2, rating < 1900 ? 0.15 : 0.05, rng.next_u64(), "minimax"};
  };
  eval::NoisySearchPolicy white_policy = make_policy(white_elo);
  eval::NoisySearchPolicy black_policy = make_policy(black_elo);

  const bool with_evals = rng.next_double() < cfg.eval_fraction;
  const bool with_clocks = rng.next_double() >= cfg.no_clock_fraction;
  const bool empty_game = rng.next_double() < cfg.empty_game_fraction;

  const int ply_cap = empty_game ? 0 : 20 + static_cast<int>(rng.next_below(cfg.max_plies - 19));
  double remaining[2] = {static_cast<double>(tc->base), static_cast<double>(tc->base)};

  PositionHistory history;
  pgn::GameResult result = pgn::GameResult::Draw;
  bool decided = false;
  int mate_ply = 0;

  for (int ply = 1; ply <= ply_cap; ++ply) {
    const Color mover = history.current().side_to_move();
    if (history.current().legal_moves().empty()) break;
    Move move = (mover == Color::White ? white_policy : black_policy).predict(history);

    pgn::TimedMove tm;
    tm.san = to_san(move, history.current());
    history.push(move);

    if (with_clocks) {
      const double used =
          std::min(remaining[static_cast<int>(mover)],
                   tc->base / 70.0 * (0.2 + 2.2 * rng.next_double() * rng.next_double()));
      remaining[static_cast<int>(mover)] =
          std::max(0.0, remaining[static_cast<int>(mover)] - used) + tc->increment;
      tm.clock_after = static_cast<int>(remaining[static_cast<int>(mover)]);
    }
    if (with_evals)
      tm.eval = pgn::EvalScore{false, eval::material_eval_white(history.current()) +
                                          static_cast<int>(rng.next_below(41)) - 20};
    g.moves.push_back(tm);

    if (history.current().legal_moves().empty()) {
      if (history.current().in_check()) {
        result = mover == Color::White ? pgn::GameResult::WhiteWin : pgn::GameResult::BlackWin;
        mate_ply = ply;
      } else {
        result = pgn::GameResult::Draw;
      }
      decided = true;
      break;
    }
    const int material = eval::material_eval_white(history.current());
    if (std::abs(material) > 1300) {  // hopeless; resignation
      result = material > 0 ? pgn::GameResult::WhiteWin : pgn::GameResult::BlackWin;
      decided = true;
      break;
    }
    if (with_clocks && remaining[static_cast<int>(other(mover))] <= 0.5) {
      result = mover == Color::White ? pgn::GameResult::WhiteWin : pgn::GameResult::BlackWin;
      decided = true;
      break;
    }
  }
  if (!decided && !g.moves.empty()) {
    const int material = eval::material_eval_white(history.current());
    result = std::abs(material) < 100
                 ? pgn::GameResult::Draw
                 : (material > 0 ? pgn::GameResult::WhiteWin : pgn::GameResult::BlackWin);
  }

  // near-mate plies get mate annotations the way analysed games do
  if (with_evals && mate_ply > 0) {
    const int sign = result == pgn::GameResult::WhiteWin ? 1 : -1;
    for (int ply = std::max(1, mate_ply - 5); ply < mate_ply; ++ply)
      g.moves[ply - 1].eval = pgn::EvalScore{true, sign * ((mate_ply - ply + 1) / 2 + (mate_ply - ply) % 2)};
    g.moves[mate_ply - 1].eval.reset();
  }

  g.header.result = result;
  g.header.white_elo = white_elo;
  g.header.black_elo = black_elo;
  g.header.time_control = {tc->base, tc->increment};
  const int year = cfg.first_year + static_cast<int>(rng.next_below(std::max(1, cfg.years)));
  const int month = 1 + static_cast<int>(rng.next_below(12));
  const int day = 1 + static_cast<int>(rng.next_below(28));
  g.header.date = {year, month, day};

  char date_buf[16];
  std::snprintf(date_buf, sizeof date_buf, "%04d.%02d.%02d", year, month, day);
  g.tags["Event"] = tc->event;
  g.tags["Site"] = "https://lichess.org/" + detail::random_game_id(rng);
  g.tags["White"] = "player" + std::to_string(rng.next_below(100000));
  g.tags["Black"] = "player" + std::to_string(rng.next_below(100000));
  g.tags["Result"] = pgn::result_text(result);
  g.tags["UTCDate"] = date_buf;
  g.tags["WhiteElo"] = std::to_string(white_elo);
  g.tags["BlackElo"] = std::to_string(black_elo);
  g.tags["TimeControl"] = std::to_string(tc->base) + "+" + std::to_string(tc->increment);
  g.tags["Termination"] = "Normal";

  if (rng.next_double() < cfg.missing_elo_fraction) g.tags["WhiteElo"] = "?";
  if (rng.next_double() < cfg.variant_fraction) g.tags["Variant"] = "Antichess";
  for (const auto& m : g.moves) {
    if (m.eval) g.header.has_evals = true;
    if (m.clock_after) g.header.has_clocks = true;
  }
  return g;
}

inline std::vector<pgn::GameRecord> generate_corpus(const CorpusConfig& cfg) {
  Rng rng(cfg.seed);
  std::vector<pgn::GameRecord> out;
  out.reserve(cfg.games);
  for (int i = 0; i < cfg.games; ++i) out.push_back(generate_game(cfg, rng));
  return out;
}

// Writes games and occasionally interleaves parser hazards that real
// archives contain: NAGs, inline variations, stray annotations.
inline void write_corpus(const std::vector<pgn::GameRecord>& games, std::ostream& out,
                         uint64_t hazard_seed = 0) {
  Rng rng(hazard_seed);
  for (const auto& g : games) {
    if (hazard_seed && rng.next_double() < 0.05 && g.moves.size() > 4) {
      // hand-write one game's movetext with decorations the reader must skip
      if (auto it = g.tags.find("Event"); it != g.tags.end())
        out << "[Event \"" << it->second << "\"]\n";
      for (const auto& [key, value] : g.tags)
        if (key != "Event") out << '[' << key << " \"" << value << "\"]\n";
      out << '\n';
      int ply = 0;
      for (const auto& m : g.moves) {
        if (ply % 2 == 0) out << (ply / 2 + 1) << ". ";
        out << m.san << ' ';
        if (ply == 1) out << "$2 { a dubious reply } ";
        if (ply == 3) out << "( " << (ply / 2 + 1) << "... a6 { sideline } ) ";
        if (m.eval || m.clock_after) {
          out << "{ ";
          if (m.eval) out << "[%eval " << pgn::format_eval(*m.eval) << "] ";
          if (m.clock_after) out << "[%clk " << pgn::format_clock(*m.clock_after) << "] ";
          out << "} ";
        }
        ++ply;
      }
      out << pgn::result_text(g.header.result) << "\n\n";
    } else {
      pgn::write_game(g, out);
    }
  }
}

}  // namespace hc::synth
