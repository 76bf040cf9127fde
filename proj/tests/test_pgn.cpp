#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "humanchess/pgn/blocks.hpp"
#include "humanchess/pgn/filter.hpp"
#include "humanchess/pgn/reader.hpp"
#include "humanchess/pgn/writer.hpp"
#include "humanchess/synth/corpus.hpp"

using namespace hc;
using namespace hc::pgn;
using hc::chess::Color;

namespace {

// Scripted game of `plies` random legal moves with synthetic clocks/evals.
GameRecord scripted_game(int plies, uint64_t seed, int base = 300,
                         const std::vector<int>& clock_overrides = {}) {
  Rng rng(seed);
  GameRecord g;
  g.header.white_elo = 1500;
  g.header.black_elo = 1540;
  g.header.time_control = {base, 0};
  g.header.result = GameResult::WhiteWin;
  chess::PositionHistory h;
  double clocks[2] = {static_cast<double>(base), static_cast<double>(base)};
  for (int i = 0; i < plies; ++i) {
    auto moves = h.current().legal_moves();
    if (moves.empty()) break;
    const Color mover = h.current().side_to_move();
    chess::Move m = moves[rng.next_below(moves.size())];
    TimedMove tm;
    tm.san = chess::to_san(m, h.current());
    clocks[static_cast<int>(mover)] -= 3;
    if (i < static_cast<int>(clock_overrides.size()) && clock_overrides[i] >= 0)
      clocks[static_cast<int>(mover)] = clock_overrides[i];
    tm.clock_after = static_cast<int>(clocks[static_cast<int>(mover)]);
    tm.eval = EvalScore{false, static_cast<int>(rng.next_below(201)) - 100};
    g.moves.push_back(tm);
    h.push(m);
  }
  g.header.has_clocks = true;
  g.header.has_evals = true;
  return g;
}

}  // namespace

TEST_CASE("clock and eval annotation grammar") {
  CHECK(*parse_clock("0:02:30") == 150);
  CHECK(*parse_clock("1:00:05") == 3605);
  CHECK(!parse_clock("abc"));
  CHECK(parse_eval("-1.3")->value == -130);
  CHECK(!parse_eval("-1.3")->mate);
  CHECK(parse_eval("#3")->mate);
  CHECK(parse_eval("#3")->value == 3);
  CHECK(parse_eval("#-5")->value == -5);
  CHECK(parse_eval("#3")->as_cp() == 9999);
  CHECK(parse_eval("#-5")->as_cp() == -9999);
  CHECK(parse_eval("0.17")->as_cp() == 17);
}

TEST_CASE("annotated movetext parses clocks and evals") {
  const std::string pgn =
      "[Event \"Rated Blitz game\"]\n"
      "[Site \"https://lichess.org/abcd1234\"]\n"
      "[White \"alice\"]\n[Black \"bob\"]\n"
      "[Result \"1-0\"]\n[UTCDate \"2019.04.05\"]\n"
      "[WhiteElo \"1912\"]\n[BlackElo \"1893\"]\n[TimeControl \"180+0\"]\n"
      "\n"
      "1. e4 { [%eval 0.2] [%clk 0:02:30] } 1... e5 { [%eval -1.3] [%clk 0:02:58] }\n"
      "2. Nf3 { [%eval #3] [%clk 0:02:20] } 1-0\n\n";
  std::istringstream in(pgn);
  PgnReader reader(in);
  auto g = reader.next();
  REQUIRE(g.has_value());
  REQUIRE(g->moves.size() == 3);
  CHECK(g->moves[0].san == "e4");
  CHECK(*g->moves[0].clock_after == 150);
  CHECK(g->moves[0].eval->value == 20);
  CHECK(g->moves[1].eval->value == -130);
  CHECK(g->moves[2].eval->mate);
  CHECK(g->header.white_elo == 1912);
  CHECK(g->header.time_control.base == 180);
  CHECK(g->header.date.year == 2019);
  CHECK(g->header.has_evals);
  CHECK(!reader.next());
}

TEST_CASE("reader skips and counts bad games, keeps good ones") {
  const std::string pgn =
      "[Event \"A\"]\n[Result \"1-0\"]\n[WhiteElo \"1000\"]\n[BlackElo \"1000\"]\n"
      "[TimeControl \"180+0\"]\n\n1. e4 1-0\n\n"
      "[Event \"B\"]\n[Result \"0-1\"]\n[WhiteElo \"?\"]\n[BlackElo \"1400\"]\n\n1. d4 0-1\n\n"
      "[Event \"C\"]\n[Result \"1-0\"]\n[WhiteElo \"1500\"]\n[BlackElo \"1500\"]\n"
      "[Variant \"Antichess\"]\n\n1. e4 1-0\n\n"
      "[Event \"D\"]\n[Result \"*\"]\n[WhiteElo \"1500\"]\n[BlackElo \"1500\"]\n\n*\n\n"
      "[Event \"E\"]\n[Result \"1/2-1/2\"]\n[WhiteElo \"2000\"]\n[BlackElo \"2001\"]\n"
      "[TimeControl \"-\"]\n\n1. c4 $4 (1. e4 { better }) c5 1/2-1/2\n";
  std::istringstream in(pgn);
  PgnReader reader(in);
  std::vector<GameRecord> games;
  while (auto g = reader.next()) games.push_back(*g);
  REQUIRE(games.size() == 2);
  CHECK(games[0].tags.at("Event") == "A");
  CHECK(games[1].tags.at("Event") == "E");
  CHECK(games[1].moves.size() == 2);  // NAG and variation skipped
  CHECK(reader.skip_counts().at("missing_rating") == 1);
  CHECK(reader.skip_counts().at("variant") == 1);
  CHECK(reader.skip_counts().at("unfinished") == 1);
}

TEST_CASE("unterminated comment raises StreamCorrupt") {
  std::istringstream in("[Event \"A\"]\n[Result \"1-0\"]\n\n1. e4 { never closed");
  PgnReader reader(in);
  CHECK_THROWS_AS(reader.next(), StreamCorrupt);
}

TEST_CASE("reading is streaming, not slurping") {
  synth::CorpusConfig cfg;
  cfg.games = 200;
  cfg.seed = 77;
  std::ostringstream out;
  synth::write_corpus(synth::generate_corpus(cfg), out);
  const std::string text = out.str();
  std::istringstream in(text);
  PgnReader reader(in);
  REQUIRE(reader.next().has_value());
  // after one game, only a sliver of the stream may be consumed
  CHECK(static_cast<size_t>(in.tellg()) < text.size() / 20);
}

TEST_CASE("time control classification") {
  CHECK(classify_time_control({60, 0}) == TimeFormat::Bullet);
  CHECK(classify_time_control({180, 0}) == TimeFormat::Blitz);
  CHECK(classify_time_control({30, 0}) == TimeFormat::HyperBullet);
  CHECK(classify_time_control({300, 3}) == TimeFormat::Blitz);
  CHECK(classify_time_control({600, 0}) == TimeFormat::Rapid);
  CHECK(classify_time_control({900, 10}) == TimeFormat::Classical);
  CHECK(classify_time_control({-1, 0}) == TimeFormat::Classical);
  CHECK(estimated_duration({180, 2}) == 260);
}

TEST_CASE("rating bins") {
  GameHeader h;
  h.white_elo = 1150;
  h.black_elo = 1180;
  CHECK(bin_for_game(h)->lower == 1100);
  h.black_elo = 1250;
  CHECK(!bin_for_game(h));
  h.white_elo = 1999;
  h.black_elo = 1900;
  CHECK(bin_for_game(h)->lower == 1900);
}

TEST_CASE("default policy drops the opening and low-clock moves") {
  GameRecord g = scripted_game(40, 2);
  FilterPolicy policy;
  ExtractStats st;
  auto instances = extract_instances(g, policy, &st);
  CHECK(instances.size() <= 30);
  CHECK(st.dropped_opening == 10);
  for (const auto& inst : instances) {
    CHECK(inst.ply_index > 10);
    CHECK(inst.mover_clock_fraction * 300 > 30);
    CHECK(inst.history.current().is_legal(inst.played));
  }
  // ply 11 instance: 5 of the mover's moves happened before it, 3s each
  CHECK(instances.front().ply_index == 11);
  CHECK(instances.front().mover_clock_fraction == doctest::Approx((300 - 5 * 3) / 300.0));
}

TEST_CASE("a move made with 25 seconds on the clock is excluded") {
  // override: mover's clock after ply 15 is 25s, so their ply-17 move is cut
  std::vector<int> overrides(40, -1);
  overrides[14] = 25;
  GameRecord g = scripted_game(40, 3, 300, overrides);
  FilterPolicy policy;
  policy.cutoff_mode = ClockCutoffMode::MoverOnly;
  auto instances = extract_instances(g, policy);
  for (const auto& inst : instances) CHECK(inst.ply_index != 17);
  // either-player mode removes everything after ply 15
  policy.cutoff_mode = ClockCutoffMode::EitherRestOfGame;
  auto strict = extract_instances(g, policy);
  for (const auto& inst : strict) CHECK(inst.ply_index <= 15);
  CHECK(strict.size() < instances.size());
}

TEST_CASE("no-op policy emits one instance per ply") {
  GameRecord g = scripted_game(40, 4);
  FilterPolicy policy;
  policy.skip_opening_ply = 0;
  policy.min_clock = 0;
  auto instances = extract_instances(g, policy);
  CHECK(instances.size() == g.moves.size());
  // result bookkeeping: white won this scripted game
  for (const auto& inst : instances) {
    const bool white_moves = inst.mover() == Color::White;
    CHECK(inst.result_for_mover == (white_moves ? 1.0 : 0.0));
    CHECK(inst.mover_rating == (white_moves ? 1500 : 1540));
  }
}

TEST_CASE("game-level policy exclusions are reported") {
  GameRecord bullet = scripted_game(20, 5);
  bullet.header.time_control = {60, 0};
  ExtractStats st;
  CHECK(extract_instances(bullet, {}, &st).empty());
  CHECK(std::string(st.game_skip) == "fast_time_control");

  GameRecord unbinned = scripted_game(20, 6);
  unbinned.header.black_elo = 1790;
  FilterPolicy same_bin;
  same_bin.require_same_bin = true;
  CHECK(extract_instances(unbinned, same_bin, &st).empty());
  CHECK(std::string(st.game_skip) == "different_bins");

  GameRecord no_evals = scripted_game(20, 7);
  for (auto& m : no_evals.moves) m.eval.reset();
  no_evals.header.has_evals = false;
  FilterPolicy want_evals;
  want_evals.require_evals = true;
  CHECK(extract_instances(no_evals, want_evals, &st).empty());
  CHECK(std::string(st.game_skip) == "missing_evals");
}

TEST_CASE("replay failure surfaces as ReplayFailure") {
  GameRecord g = scripted_game(10, 8);
  g.moves[4].san = "Qxh8";
  CHECK_THROWS_AS(extract_instances(g, {}), ReplayFailure);
}

TEST_CASE("eval chaining: before comes from the previous ply") {
  GameRecord g = scripted_game(14, 9);
  FilterPolicy policy;
  policy.skip_opening_ply = 2;
  policy.min_clock = 0;
  auto instances = extract_instances(g, policy);
  REQUIRE(!instances.empty());
  for (const auto& inst : instances) {
    REQUIRE(inst.eval_before.has_value());
    CHECK(*inst.eval_before == g.moves[inst.ply_index - 2].eval->as_cp());
    CHECK(*inst.eval_after == g.moves[inst.ply_index - 1].eval->as_cp());
  }
}

TEST_CASE("corpus round trip: write, parse, replay, rewrite") {
  synth::CorpusConfig cfg;
  cfg.games = 120;
  cfg.seed = 1234;
  cfg.variant_fraction = 0.0;
  cfg.missing_elo_fraction = 0.0;
  auto games = synth::generate_corpus(cfg);
  std::ostringstream out;
  synth::write_corpus(games, out);

  std::istringstream in(out.str());
  PgnReader reader(in);
  std::vector<GameRecord> parsed;
  while (auto g = reader.next()) parsed.push_back(*g);
  REQUIRE(parsed.size() == games.size());
  for (size_t i = 0; i < games.size(); ++i) {
    CHECK(parsed[i].header.white_elo == games[i].header.white_elo);
    CHECK(parsed[i].header.result == games[i].header.result);
    REQUIRE(parsed[i].moves.size() == games[i].moves.size());
    for (size_t k = 0; k < games[i].moves.size(); ++k) CHECK(parsed[i].moves[k] == games[i].moves[k]);
    // replays cleanly
    FilterPolicy noop;
    noop.skip_opening_ply = 0;
    noop.min_clock = 0;
    noop.min_estimated_duration = 0;
    auto instances = extract_instances(parsed[i], noop);
    CHECK(instances.size() == parsed[i].moves.size());
  }

  // second serialization is byte-identical
  std::ostringstream again;
  synth::write_corpus(parsed, again);
  CHECK(again.str() == out.str());
}

TEST_CASE("generation is deterministic under seed") {
  synth::CorpusConfig cfg;
  cfg.games = 40;
  cfg.seed = 9;
  std::ostringstream a, b;
  synth::write_corpus(synth::generate_corpus(cfg), a);
  synth::write_corpus(synth::generate_corpus(cfg), b);
  CHECK(a.str() == b.str());
  cfg.seed = 10;
  std::ostringstream c;
  synth::write_corpus(synth::generate_corpus(cfg), c);
  CHECK(a.str() != c.str());
}

TEST_CASE("block plans partition years deterministically") {
  std::map<int, uint64_t> per_year{{2019, 10000}};
  SplitPlan plan = build_blocks(per_year, 1000, 2, 42);
  REQUIRE(plan.blocks.size() == 10);
  int train = 0, validation = 0;
  for (const auto& b : plan.blocks) {
    if (b.role == BlockRole::Train) ++train;
    if (b.role == BlockRole::Validation) ++validation;
    CHECK(b.game_count == 1000);
  }
  CHECK(train == 2);
  CHECK(validation == 3);
  // validation blocks sit at the end of the last year
  CHECK(plan.blocks[7].role == BlockRole::Validation);
  CHECK(plan.blocks[8].role == BlockRole::Validation);
  CHECK(plan.blocks[9].role == BlockRole::Validation);

  SplitPlan plan2 = build_blocks(per_year, 1000, 2, 42);
  for (size_t i = 0; i < plan.blocks.size(); ++i) CHECK(plan.blocks[i].role == plan2.blocks[i].role);

  // 3 blocks from 600k-scale arithmetic, desk numbers
  std::map<int, uint64_t> one_year{{2018, 600}};
  CHECK(build_blocks(one_year, 200, 1, 1, 0).blocks.size() == 3);

  // undersized years warn but still emit a plan
  std::map<int, uint64_t> small{{2017, 50}, {2018, 5000}};
  SplitPlan warned = build_blocks(small, 1000, 2, 7);
  CHECK(!warned.warnings.empty());
}
