// Acceptance suite: twelve go/no-go checks over the whole toolkit, each
// printing one PASS/FAIL line. Run all or one with --criterion N.
//
//  1 chess kernel perft           7 blunder pipeline learnability
//  2 corpus replay                8 blunder labeling exactness
//  3 move-encoding bijectivity    9 collective aggregation
//  4 gradient checks             10 eval algebra
//  5 desk overfit                11 UCI loopback
//  6 skill targeting             12 end-to-end determinism

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "humanchess/data/collective.hpp"
#include "humanchess/data/sampling.hpp"
#include "humanchess/data/shard.hpp"
#include "humanchess/engine/subprocess.hpp"
#include "humanchess/eval/metrics.hpp"
#include "humanchess/eval/synthetic.hpp"
#include "humanchess/model/blunder.hpp"
#include "humanchess/model/policy.hpp"
#include "humanchess/synth/corpus.hpp"
#include "humanchess/winprob/table.hpp"
#include "support/layer_cases.hpp"
#include "support/mailbox_oracle.hpp"
#include "support/planted.hpp"
#include "support/populations.hpp"

using namespace hc;
namespace fs = std::filesystem;

namespace {

struct Check {
  int id;
  std::string title;
  std::function<std::string()> run;  // empty string = pass, else failure reason
};

std::string tool_path(const char* env, const char* fallback_note) {
  const char* p = std::getenv(env);
  if (!p) throw std::runtime_error(std::string(env) + " not set; " + fallback_note);
  return p;
}

fs::path work_dir() {
  static fs::path dir = [] {
    auto d = fs::temp_directory_path() / "hc_acceptance";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

// ---------------------------------------------------------------- criterion 1

std::string check_perft() {
  using namespace hc::chess;
  struct Case {
    const char* fen;
    int depth;
    uint64_t nodes;
  };
  const Case table[] = {
      {Position::kStartFen, 1, 20},
      {Position::kStartFen, 2, 400},
      {Position::kStartFen, 3, 8902},
      {Position::kStartFen, 4, 197281},
      {Position::kStartFen, 5, 4865609},
      // castling, en passant, promotion coverage
      {"r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1", 4, 4085603},
      {"8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1", 5, 674624},
      {"r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1", 4, 422333},
      {"rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8", 4, 2103487},
      {"r4rk1/1pp1qppp/p1np1n2/2b1p1B1/2B1P1b1/P1NP1N2/1PP1QPPP/R4RK1 w - - 0 10", 4, 3894594},
  };
  for (const auto& c : table) {
    const uint64_t got = Position::from_fen(c.fen).perft(c.depth);
    if (got != c.nodes)
      return std::string("perft(") + c.fen + ", " + std::to_string(c.depth) + ") = " +
             std::to_string(got) + ", want " + std::to_string(c.nodes);
    // independent mailbox re-derivation at a shallow depth
    const int od = std::min(c.depth, 2);
    if (oracle::perft(oracle::from_fen(c.fen), od) != Position::from_fen(c.fen).perft(od))
      return std::string("oracle disagrees at shallow depth for ") + c.fen;
  }
  return "";
}

// ---------------------------------------------------------------- criterion 2

std::string check_corpus_replay() {
  synth::CorpusConfig cfg;
  cfg.games = 1000;
  cfg.seed = 20190401;
  cfg.fast_policies = true;
  // every game must parse; the skip paths have their own unit tests
  cfg.variant_fraction = 0;
  cfg.missing_elo_fraction = 0;
  const auto games = synth::generate_corpus(cfg);
  const fs::path pgn_path = work_dir() / "replay_corpus.pgn";
  {
    std::ofstream out(pgn_path);
    synth::write_corpus(games, out, cfg.seed);
  }
  std::ifstream in(pgn_path);
  pgn::PgnReader reader(in);
  pgn::FilterPolicy noop;
  noop.min_estimated_duration = 0;
  noop.min_clock = 0;
  noop.skip_opening_ply = 0;
  uint64_t parsed = 0, instances = 0;
  std::ostringstream rewritten;
  while (auto g = reader.next()) {
    ++parsed;
    auto batch = pgn::extract_instances(*g, noop);  // throws on replay failure
    for (const auto& inst : batch) {
      if (!inst.history.current().is_legal(inst.played))
        return "illegal played move at instance " + std::to_string(instances);
      ++instances;
    }
    pgn::write_game(*g, rewritten);  // re-serialization must not throw
  }
  if (parsed != static_cast<uint64_t>(games.size()))
    return "only " + std::to_string(parsed) + " of " + std::to_string(games.size()) +
           " games parsed";
  // the rewritten stream parses to the same number of games
  std::istringstream again(rewritten.str());
  pgn::PgnReader reader2(again);
  uint64_t reparsed = 0;
  while (auto g = reader2.next()) ++reparsed;
  if (reparsed != parsed)
    return "reserialized stream lost games: " + std::to_string(reparsed) + " of " +
           std::to_string(parsed);
  return "";
}

// ---------------------------------------------------------------- criterion 3

std::string check_move_encoding() {
  Rng rng(20200101);
  uint64_t positions = 0, moves_checked = 0;
  while (positions < 10000) {
    chess::Position p = chess::Position::startpos();
    const int plies = static_cast<int>(rng.next_below(140));
    for (int i = 0; i < plies; ++i) {
      auto moves = p.legal_moves();
      if (moves.empty()) break;
      p = p.apply(moves[rng.next_below(moves.size())]);
    }
    ++positions;
    const auto legal = p.legal_moves();  // sorted
    std::set<int> indices;
    for (const auto& m : legal) {
      const int idx = encode::encode_move(m, p);
      if (idx < 0 || idx >= encode::kMoveIndexCount) return "index out of range at " + p.to_fen();
      if (!indices.insert(idx).second) return "index collision at " + p.to_fen();
      auto back = encode::decode_move(idx, p, &legal);
      if (!back || !(*back == m))
        return "decode(encode(" + chess::to_uci(m) + ")) mismatch at " + p.to_fen();
      ++moves_checked;
    }
    uint64_t decodable = 0;
    for (int idx = 0; idx < encode::kMoveIndexCount; ++idx)
      if (encode::decode_move(idx, p, &legal)) ++decodable;
    if (decodable != legal.size())
      return "legal decode count " + std::to_string(decodable) + " != " +
             std::to_string(legal.size()) + " at " + p.to_fen();
  }
  if (moves_checked < 100000) return "suspiciously few moves checked";
  return "";
}

// ---------------------------------------------------------------- criterion 4

std::string check_gradients() {
  for (const auto& c : layer_cases::all_cases()) {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
      const auto report = c.run(seed);
      if (report.checked == 0) return c.name + ": nothing checked";
      if (report.max_rel_err > 1e-5)
        return c.name + " seed " + std::to_string(seed) +
               ": rel err " + std::to_string(report.max_rel_err) + " (" + report.worst + ")";
      if (report.skipped > report.checked / 50 + 2)
        return c.name + ": too many non-smooth skips (" + std::to_string(report.skipped) + ")";
    }
  }
  return "";
}

// ---------------------------------------------------------------- criterion 5

std::string check_desk_overfit() {
  synth::CorpusConfig ccfg;
  ccfg.games = 40;
  ccfg.seed = 17;
  ccfg.variant_fraction = 0;
  ccfg.missing_elo_fraction = 0;
  pgn::FilterPolicy fp;
  fp.min_estimated_duration = 0;
  fp.min_clock = 0;
  fp.skip_opening_ply = 0;
  std::vector<pgn::MoveInstance> train;
  std::set<std::string> seen;
  for (const auto& g : synth::generate_corpus(ccfg)) {
    for (auto& inst : pgn::extract_instances(g, fp)) {
      if (!seen.insert(inst.history.current().to_fen()).second) continue;
      train.push_back(std::move(inst));
      if (train.size() == 1000) break;
    }
    if (train.size() == 1000) break;
  }
  if (train.size() != 1000) return "could not assemble 1000 distinct instances";

  model::PolicyNetConfig cfg;
  cfg.blocks = 2;
  cfg.channels = 16;
  cfg.policy_head_channels = 16;
  cfg.value_head_channels = 8;
  cfg.value_hidden = 64;
  cfg.batch_size = 32;
  cfg.steps = 2000;
  cfg.sample_probability = 1.0;
  cfg.shuffle_capacity = 1000;
  cfg.mask_policy_loss = false;  // the step-0 reference is the full softmax
  cfg.schedule = {0.01, 0.1, {1500}, 0.0, 0};
  cfg.eval_every = 0;
  auto result = model::train_policy(train, {}, cfg, 1);

  const double expect = std::log(4672.0);
  const double step0 = result.metrics.at(0).policy_loss;
  if (std::abs(step0 - expect) / expect > 0.02)
    return "step-0 policy loss " + std::to_string(step0) + " not within 2% of ln(4672)";

  size_t hits = 0;
  for (const auto& inst : train)
    if (result.model.predict_move(inst.history).first == inst.played) ++hits;
  const double match = static_cast<double>(hits) / train.size();
  if (match < 0.95) return "training move-match " + std::to_string(match) + " < 0.95";
  return "";
}

// ---------------------------------------------------------------- criterion 6

std::string check_skill_targeting() {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    auto pop_a = populations::generate({1, 0.3, 1200, seed * 1000 + 1}, 20000);
    auto pop_b = populations::generate({2, 0.1, 1800, seed * 1000 + 2}, 20000);
    auto split = [](std::vector<pgn::MoveInstance>& v) {
      const size_t held = v.size() / 10;
      std::vector<pgn::MoveInstance> test(v.end() - static_cast<long>(held), v.end());
      v.resize(v.size() - held);
      return test;
    };
    auto test_a = split(pop_a), test_b = split(pop_b);

    model::PolicyNetConfig cfg;
    cfg.blocks = 2;
    cfg.channels = 16;
    cfg.policy_head_channels = 16;
    cfg.value_head_channels = 8;
    cfg.value_hidden = 64;
    cfg.batch_size = 32;
    cfg.steps = 800;
    cfg.sample_probability = 1.0;
    cfg.shuffle_capacity = 8192;
    cfg.schedule = {0.01, 0.1, {560}, 0.0, 0};
    cfg.eval_every = 0;

    auto net_a = model::train_policy(pop_a, {}, cfg, seed).model;
    auto net_b = model::train_policy(pop_b, {}, cfg, seed + 7).model;

    auto match = [](model::PolicyModel& m, const std::vector<pgn::MoveInstance>& ts) {
      size_t hits = 0;
      for (const auto& inst : ts) hits += m.predict_move(inst.history).first == inst.played;
      return 100.0 * static_cast<double>(hits) / ts.size();
    };
    const double aa = match(net_a, test_a), ab = match(net_a, test_b);
    const double bb = match(net_b, test_b), ba = match(net_b, test_a);
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "seed %llu: A %.1f own vs %.1f cross, B %.1f own vs %.1f cross",
                  static_cast<unsigned long long>(seed), aa, ab, bb, ba);
    std::cerr << "  [skill-targeting] " << detail << '\n';
    if (aa - ab < 5.0 || bb - ba < 5.0) return std::string("margin under 5 points: ") + detail;
  }
  return "";
}

// ---------------------------------------------------------------- criterion 7

std::string check_blunder_pipeline() {
  // board rule: mover's queen is attacked
  {
    auto train = planted::board_rule_dataset(8000, 1);
    auto val = planted::board_rule_dataset(250, 2);
    auto test = planted::board_rule_dataset(500, 3);
    model::BlunderNetConfig cfg;
    cfg.blocks = 5;
    cfg.channels = 16;
    cfg.batch_size = 64;
    cfg.steps = 2600;
    cfg.schedule = {0.003, 0.2, {1560, 2210}, 0.0, 0};
    cfg.eval_every = 200;
    cfg.early_stop_evals = 0;
    auto result = model::train_blunder(train, val, cfg, 5);
    const double acc = result.model.accuracy(test);
    std::cerr << "  [blunder-pipeline] board-rule CNN test accuracy " << acc << '\n';
    if (acc < 0.90) return "board-rule CNN accuracy " + std::to_string(acc) + " < 0.90";
  }
  // metadata rule: mover clock fraction < 0.2; board planes carry nothing
  {
    model::BlunderNetConfig cfg;
    cfg.blocks = 1;
    cfg.channels = 8;
    cfg.batch_size = 32;
    cfg.steps = 300;
    cfg.schedule = {0.002, 1.0, {}, 0.0, 0};
    cfg.eval_every = 0;
    cfg.early_stop_evals = 0;

    cfg.with_metadata = true;
    auto with_meta = model::train_blunder(planted::metadata_rule_dataset(800, 3, true), {}, cfg, 9);
    const double acc22 = with_meta.model.accuracy(planted::metadata_rule_dataset(400, 4, true));

    cfg.with_metadata = false;
    auto board_only =
        model::train_blunder(planted::metadata_rule_dataset(800, 3, false), {}, cfg, 9);
    const double acc17 = board_only.model.accuracy(planted::metadata_rule_dataset(400, 4, false));
    std::cerr << "  [blunder-pipeline] metadata rule: 22ch " << acc22 << " vs 17ch " << acc17
              << '\n';
    if (acc22 - acc17 < 0.30)
      return "metadata margin " + std::to_string(acc22 - acc17) + " < 0.30 (22ch " +
             std::to_string(acc22) + ", 17ch " + std::to_string(acc17) + ")";
  }
  return "";
}

// ---------------------------------------------------------------- criterion 8

std::string check_labeling_exactness() {
  using chess::Color;
  // fixture table: bucket c in {-500,...,500 step 10} holds probability
  // (512 + c)/1024, an exact binary fraction, so every hand-computed
  // comparison below is unambiguous in double arithmetic
  winprob::WinProbTable table;
  for (int c = -500; c <= 500; c += 10) {
    const int wins = 512 + c;
    for (int i = 0; i < wins; ++i) table.add({c, 1.0});
    for (int i = 0; i < 1024 - wins; ++i) table.add({c, 0.0});
  }
  // white-mover delta in 1/1024 units is (before-after); blunder iff
  // delta/1024 >= 0.1, i.e. cp drop >= 103; black movers mirror the sign
  struct Case {
    int before, after;
    Color mover;
    bool expected;
  };
  const int M = winprob::kMateCp;
  const Case cases[50] = {
      // clear white blunders and non-blunders
      {0, -200, Color::White, true},     {0, -110, Color::White, true},
      {0, -100, Color::White, false},    {0, -90, Color::White, false},
      {200, 80, Color::White, true},     {200, 100, Color::White, false},
      {-100, -210, Color::White, true},  {-100, -200, Color::White, false},
      {300, 190, Color::White, true},    {300, 200, Color::White, false},
      {500, 390, Color::White, true},    {500, 400, Color::White, false},
      {-390, -500, Color::White, true},  {-400, -500, Color::White, false},
      {0, 0, Color::White, false},       {0, 100, Color::White, false},
      {-500, 500, Color::White, false},  {110, 0, Color::White, true},
      // black movers: a blunder is a white-perspective rise of >= 110
      {0, 200, Color::Black, true},      {0, 110, Color::Black, true},
      {0, 100, Color::Black, false},     {0, 90, Color::Black, false},
      {-200, -80, Color::Black, true},   {-200, -100, Color::Black, false},
      {100, 210, Color::Black, true},    {100, 200, Color::Black, false},
      {-300, -190, Color::Black, true},  {-300, -200, Color::Black, false},
      {0, -200, Color::Black, false},    {500, -500, Color::Black, false},
      {-110, 0, Color::Black, true},     {0, 0, Color::Black, false},
      // mate sentinels, both colors
      {M, -M, Color::White, true},       {M, 0, Color::White, true},
      {M, 400, Color::White, true},      {0, -M, Color::White, true},
      {-M, M, Color::White, false},      {-M, 0, Color::White, false},
      {M, M, Color::White, false},       {-M, -M, Color::White, false},
      {-M, M, Color::Black, true},       {-M, 0, Color::Black, true},
      {-M, -400, Color::Black, true},    {0, M, Color::Black, true},
      {M, -M, Color::Black, false},      {M, 0, Color::Black, false},
      {M, M, Color::Black, false},       {-M, -M, Color::Black, false},
      // clamping beyond the populated range behaves like the extreme bucket
      {9000, 390, Color::White, true},   {9000, 400, Color::White, false},
  };
  for (size_t i = 0; i < 50; ++i) {
    const auto& c = cases[i];
    const bool got = winprob::label_blunder(c.before, c.after, c.mover, table);
    if (got != c.expected)
      return "case " + std::to_string(i) + " (" + std::to_string(c.before) + "," +
             std::to_string(c.after) + "," + (c.mover == Color::White ? "w" : "b") +
             ") got " + (got ? "blunder" : "ok");
  }

  // downsampling yields exactly floor(1.5 |pos|) negatives
  std::vector<int> pos(333), neg(5000);
  for (size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<int>(i);
  for (size_t i = 0; i < neg.size(); ++i) neg[i] = 10000 + static_cast<int>(i);
  data::DownsampleStats st;
  auto combined = data::downsample_negatives(pos, neg, 1.5, 99, &st);
  if (st.negatives_kept != 499)
    return "downsample kept " + std::to_string(st.negatives_kept) + " negatives, want 499";
  if (combined.size() != 333 + 499) return "downsample output size wrong";
  return "";
}

// ---------------------------------------------------------------- criterion 9

std::string check_collective() {
  using namespace hc::chess;
  data::CollectiveAggregator agg;
  const Position a = Position::startpos();
  const Position b = Position::startpos().apply(*parse_uci("e2e4"));
  const Position c = Position::startpos().apply(*parse_uci("d2d4"));
  const Position d = Position::startpos().apply(*parse_uci("g1f3"));

  for (int i = 0; i < 12; ++i) agg.add(a, i < 3);          // 12 occ, 3 blunders -> true (25%)
  for (int i = 0; i < 14; ++i) agg.add(b, i < 1);          // 14 occ via mirrors below
  for (int i = 0; i < 6; ++i) agg.add(b.mirror_color(), false);  // same key: 20 occ, 1 blunder
  for (int i = 0; i < 10; ++i) agg.add(c, true);           // exactly 10 -> dropped
  for (int i = 0; i < 30; ++i) agg.add(d, i < 3);          // 30 occ, 3 blunders -> exactly 10%, false

  auto records = agg.finalize(10, 10);
  if (records.size() != 3) return "expected 3 kept positions, got " + std::to_string(records.size());
  std::map<std::string, data::CollectiveRecord> by_key;
  for (const auto& r : records) by_key[r.key] = r;

  const auto& ra = by_key.at(data::collective_key(a));
  if (ra.occurrences != 12 || ra.blunders != 3 || !ra.label) return "position A record wrong";
  const auto& rb = by_key.at(data::collective_key(b));
  if (rb.occurrences != 20 || rb.blunders != 1 || rb.label) return "position B record wrong";
  if (data::collective_key(b) != data::collective_key(b.mirror_color()))
    return "mirror images got different keys";
  const auto& rd = by_key.at(data::collective_key(d));
  if (rd.occurrences != 30 || rd.blunders != 3 || rd.label)
    return "position D: exactly 10% must not be labeled";
  if (by_key.count(data::collective_key(c))) return "position C with 10 occurrences must drop";
  return "";
}

// --------------------------------------------------------------- criterion 10

std::string check_eval_algebra() {
  // agreement matrix on scripted predictors
  synth::CorpusConfig ccfg;
  ccfg.games = 15;
  ccfg.seed = 5;
  pgn::FilterPolicy fp;
  fp.min_estimated_duration = 0;
  fp.min_clock = 0;
  fp.skip_opening_ply = 6;
  eval::TestSet ts;
  ts.bin = {1500};
  for (const auto& g : synth::generate_corpus(ccfg))
    for (auto& inst : pgn::extract_instances(g, fp)) ts.instances.push_back(std::move(inst));

  eval::NoisySearchPolicy greedy(1, 0.0, 1, "greedy");
  eval::NoisySearchPolicy deeper(2, 0.0, 2, "minimax2");
  eval::UniformRandomPolicy random(3);
  std::vector<eval::Predictor*> preds{&greedy, &deeper, &random};
  const auto m = eval::agreement_matrix(preds, ts);
  for (size_t i = 0; i < 3; ++i) {
    if (m.rates[i][i] != 1.0) return "agreement diagonal not 1.0";
    for (size_t j = 0; j < 3; ++j)
      if (m.rates[i][j] != m.rates[j][i]) return "agreement matrix asymmetric";
  }

  // AUC vs the brute-force pairwise oracle on 100 random sets
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5 + static_cast<int>(rng.next_below(80));
    std::vector<double> scores;
    std::vector<uint8_t> labels;
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      scores.push_back(rng.next_below(10) / 10.0);
      labels.push_back(rng.next_below(2) ? 1 : 0);
      pos += labels.back();
    }
    if (pos == 0 || pos == n) labels[0] ^= 1;
    double brute = 0;
    uint64_t pairs = 0;
    for (int i = 0; i < n; ++i) {
      if (!labels[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (labels[j]) continue;
        ++pairs;
        if (scores[i] > scores[j]) brute += 1;
        else if (scores[i] == scores[j]) brute += 0.5;
      }
    }
    brute /= static_cast<double>(pairs);
    if (std::abs(eval::auc(scores, labels) - brute) > 1e-12)
      return "AUC disagrees with the pairwise oracle at trial " + std::to_string(trial);
  }

  // decomposition bucket totals equal the undecomposed totals
  std::vector<eval::RefEvals> refs;
  Rng rng2(9);
  for (size_t i = 0; i < ts.instances.size(); ++i) {
    eval::RefEvals r;
    r.best = 0.4 + rng2.next_double() * 0.6;
    r.second = r.best - rng2.next_double() * 0.5;
    r.played = r.best - rng2.next_double() * 0.7;
    refs.push_back(r);
  }
  const auto overall = eval::move_match(greedy, ts);
  for (auto mode : {eval::DecomposeMode::Complexity, eval::DecomposeMode::Quality}) {
    uint64_t n = 0, matches = 0;
    for (const auto& row : eval::decompose(greedy, ts, refs, mode, 0.05)) {
      n += row.n;
      matches += row.matches;
    }
    if (n != overall.n || matches != overall.matches) return "decomposition totals mismatch";
  }
  return "";
}

// --------------------------------------------------------------- criterion 11

std::string check_uci_loopback() {
  const std::string cli = tool_path("HUMANCHESS_BIN", "point it at the humanchess binary");

  // a small trained checkpoint for the server
  const fs::path ckpt = work_dir() / "loopback.ckpt";
  {
    synth::CorpusConfig ccfg;
    ccfg.games = 15;
    ccfg.seed = 23;
    pgn::FilterPolicy fp;
    fp.min_estimated_duration = 0;
    fp.min_clock = 0;
    fp.skip_opening_ply = 0;
    std::vector<pgn::MoveInstance> train;
    for (const auto& g : synth::generate_corpus(ccfg))
      for (auto& inst : pgn::extract_instances(g, fp)) train.push_back(std::move(inst));
    model::PolicyNetConfig cfg;
    cfg.blocks = 1;
    cfg.channels = 8;
    cfg.policy_head_channels = 8;
    cfg.value_head_channels = 4;
    cfg.value_hidden = 32;
    cfg.batch_size = 16;
    cfg.steps = 120;
    cfg.sample_probability = 1.0;
    cfg.shuffle_capacity = 512;
    cfg.schedule = {0.01, 1.0, {}, 0.0, 0};
    cfg.eval_every = 0;
    model::train_policy(train, {}, cfg, 3).model.save(ckpt.string());
  }

  auto play = [&](std::vector<std::string>& bestmoves) -> std::string {
    engine::Subprocess server(cli, {"uci-serve", "--checkpoint", ckpt.string()});
    auto expect = [&](const char* token) {
      for (;;) {
        auto line = server.read_line(20000);
        if (!line) throw std::runtime_error(std::string("timeout waiting for ") + token);
        if (*line == token) return;
      }
    };
    server.write_line("uci");
    expect("uciok");
    server.write_line("isready");
    expect("readyok");

    chess::Position pos = chess::Position::startpos();
    std::string moves_text;
    for (int move = 0; move < 300; ++move) {
      if (pos.legal_moves().empty()) break;
      server.write_line(moves_text.empty() ? "position startpos"
                                           : "position startpos moves" + moves_text);
      server.write_line("go depth 1");
      std::string best;
      for (;;) {
        auto line = server.read_line(20000);
        if (!line) return "timeout waiting for bestmove";
        if (line->rfind("bestmove ", 0) == 0) {
          best = line->substr(9, 5);
          while (!best.empty() && isspace(static_cast<unsigned char>(best.back()))) best.pop_back();
          break;
        }
      }
      auto m = chess::parse_uci(best);
      if (!m) return "unparseable bestmove " + best;
      if (!pos.is_legal(*m)) return "illegal bestmove " + best + " in " + pos.to_fen();
      bestmoves.push_back(best);
      pos = pos.apply(*m);
      moves_text += " " + best;
    }
    server.write_line("quit");
    return "";
  };

  std::vector<std::string> first, second;
  if (auto err = play(first); !err.empty()) return err;
  if (first.empty()) return "no moves were played";
  if (auto err = play(second); !err.empty()) return err + " (second run)";
  if (first != second) return "identical transcripts produced different bestmoves";
  std::cerr << "  [uci-loopback] self-play game of " << first.size() << " plies, twice\n";
  return "";
}

// --------------------------------------------------------------- criterion 12

std::string check_determinism() {
  const std::string cli = tool_path("HUMANCHESS_BIN", "point it at the humanchess binary");

  auto run = [&](const fs::path& dir) -> std::string {
    fs::create_directories(dir);
    auto sh = [&](const std::string& args) -> std::string {
      const std::string cmd = cli + " " + args + " >>" + (dir / "log.txt").string() + " 2>&1";
      if (std::system(cmd.c_str()) != 0) return "command failed: " + cmd;
      return "";
    };
    const std::string d = dir.string() + "/";
    std::string err;
    if (!(err = sh("synth-pgn --out " + d + "c.pgn --games 220 --seed 99 --eval-fraction 1.0"))
             .empty())
      return err;
    if (!(err = sh("ingest --pgn " + d + "c.pgn --out " + d +
                   "all.bin --summary " + d + "summary.csv --min-duration 0 --min-clock 30"))
             .empty())
      return err;
    if (!(err = sh("winprob-build --shards " + d + "all.bin --out " + d + "wp.csv")).empty())
      return err;
    if (!(err = sh("dataset-build --kind blunder --shards " + d + "all.bin --winprob " + d +
                   "wp.csv --out " + d + "bl.bin --seed 7"))
             .empty())
      return err;
    if (!(err = sh("dataset-build --kind policy --shards " + d + "all.bin --out " + d +
                   "train.bin --out-valid " + d + "valid.bin --shuffle-capacity 2048 --seed 3"))
             .empty())
      return err;
    if (!(err = sh("train --kind policy --train " + d + "train.bin --valid " + d +
                   "valid.bin --out " + d + "p.ckpt --metrics " + d +
                   "pm.csv --blocks 1 --channels 8 --batch 16 --steps 40 --lr 0.01 "
                   "--eval-every 20 --shuffle-capacity 512 --seed 11"))
             .empty())
      return err;
    if (!(err = sh("train --kind blunder-cnn --train " + d + "bl.bin --out " + d +
                   "b.ckpt --metrics " + d +
                   "bm.csv --blocks 1 --channels 8 --batch 16 --steps 30 --lr 0.002 "
                   "--eval-every 0 --early-stop 0 --seed 13"))
             .empty())
      return err;
    if (!(err = sh("eval --kind curve --test " + d + "valid.bin --ckpt " + d + "p.ckpt --out " +
                   d + "curve.csv"))
             .empty())
      return err;
    if (!(err = sh("eval --kind blunder --test " + d + "bl.bin --ckpt " + d + "b.ckpt --out " +
                   d + "blm.csv"))
             .empty())
      return err;
    return "";
  };

  const fs::path run1 = work_dir() / "det1";
  const fs::path run2 = work_dir() / "det2";
  fs::remove_all(run1);
  fs::remove_all(run2);
  if (auto err = run(run1); !err.empty()) return err;
  if (auto err = run(run2); !err.empty()) return err;

  for (const char* name : {"c.pgn", "all.bin", "summary.csv", "wp.csv", "bl.bin", "train.bin",
                           "valid.bin", "p.ckpt", "pm.csv", "b.ckpt", "bm.csv", "curve.csv",
                           "curve.csv.maxima.csv", "blm.csv"}) {
    const std::string a = slurp(run1 / name), b = slurp(run2 / name);
    if (a.empty()) return std::string(name) + " missing or empty";
    if (a != b) return std::string(name) + " differs between identical runs";
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<Check> checks = {
      {1, "chess kernel perft values", check_perft},
      {2, "corpus parse/replay/reserialize", check_corpus_replay},
      {3, "move encoding bijectivity", check_move_encoding},
      {4, "gradient checks vs finite differences", check_gradients},
      {5, "desk overfit and step-0 loss", check_desk_overfit},
      {6, "skill-targeting across populations", check_skill_targeting},
      {7, "blunder pipeline learnability", check_blunder_pipeline},
      {8, "blunder labeling and downsampling exactness", check_labeling_exactness},
      {9, "collective aggregation rules", check_collective},
      {10, "eval algebra (agreement, AUC, decomposition)", check_eval_algebra},
      {11, "UCI loopback self-play", check_uci_loopback},
      {12, "end-to-end determinism", check_determinism},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc) only = std::atoi(argv[++i]);
    if (!std::strcmp(argv[i], "--list")) {
      for (const auto& c : checks) std::cout << c.id << ": " << c.title << '\n';
      return 0;
    }
  }

  int failures = 0;
  for (const auto& c : checks) {
    if (only && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string reason;
    try {
      reason = c.run();
    } catch (const std::exception& e) {
      reason = std::string("exception: ") + e.what();
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char line[256];
    if (reason.empty()) {
      std::snprintf(line, sizeof line, "[PASS] criterion %2d: %s (%.1fs)", c.id, c.title.c_str(),
                    dt);
    } else {
      std::snprintf(line, sizeof line, "[FAIL] criterion %2d: %s (%.1fs) -- %s", c.id,
                    c.title.c_str(), dt, reason.c_str());
      ++failures;
    }
    std::cout << line << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
