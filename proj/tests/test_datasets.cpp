#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "humanchess/data/collective.hpp"
#include "humanchess/data/sampling.hpp"
#include "humanchess/data/shard.hpp"
#include "humanchess/data/shuffle.hpp"
#include "humanchess/synth/corpus.hpp"

using namespace hc;
using namespace hc::data;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

// Instances from a small synthetic corpus, replayed with a permissive policy.
std::vector<pgn::MoveInstance> sample_instances(int games, uint64_t seed) {
  synth::CorpusConfig cfg;
  cfg.games = games;
  cfg.seed = seed;
  cfg.variant_fraction = 0;
  cfg.missing_elo_fraction = 0;
  cfg.no_clock_fraction = 0;
  cfg.eval_fraction = 1.0;
  pgn::FilterPolicy policy;
  policy.min_estimated_duration = 0;
  policy.skip_opening_ply = 2;
  policy.min_clock = 0;
  std::vector<pgn::MoveInstance> out;
  for (const auto& g : synth::generate_corpus(cfg)) {
    auto batch = pgn::extract_instances(g, policy);
    out.insert(out.end(), batch.begin(), batch.end());
  }
  return out;
}

}  // namespace

TEST_CASE("shard round trip over instance-derived records") {
  auto instances = sample_instances(60, 3);
  REQUIRE(instances.size() > 500);
  std::vector<ShardRecord> records;
  for (const auto& inst : instances) records.push_back(ShardRecord::from_instance(inst));

  const auto path = temp_file("hc_shard_roundtrip.bin");
  write_shard(records, path.string());
  auto back = read_shard(path.string());
  REQUIRE(back.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) CHECK(back[i] == records[i]);
  std::filesystem::remove(path);
}

TEST_CASE("record to instance reconstruction preserves the decision") {
  auto instances = sample_instances(20, 4);
  for (const auto& inst : instances) {
    ShardRecord r = ShardRecord::from_instance(inst);
    pgn::MoveInstance back = r.to_instance();
    CHECK(back.history.current() == inst.history.current());
    CHECK(back.history.prior().size() == inst.history.prior().size());
    CHECK(back.played == inst.played);
    CHECK(back.mover_rating == inst.mover_rating);
    CHECK(back.mover_clock_fraction == inst.mover_clock_fraction);
    CHECK(back.opponent_clock_fraction == inst.opponent_clock_fraction);
    CHECK(back.eval_before == inst.eval_before);
    CHECK(back.eval_after == inst.eval_after);
    CHECK(back.result_for_mover == inst.result_for_mover);
    CHECK(back.history.current().is_legal(back.played));
  }
}

TEST_CASE("empty shard is valid") {
  const auto path = temp_file("hc_shard_empty.bin");
  write_shard({}, path.string());
  CHECK(read_shard(path.string()).empty());
  std::filesystem::remove(path);
}

TEST_CASE("corrupt shards are rejected with position information") {
  auto instances = sample_instances(5, 5);
  std::vector<ShardRecord> records;
  for (const auto& inst : instances) records.push_back(ShardRecord::from_instance(inst));
  const auto path = temp_file("hc_shard_corrupt.bin");
  write_shard(records, path.string());

  // flipped magic
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.put('Z');
  }
  CHECK_THROWS_AS(ShardReader(path.string()), CorruptShard);

  // truncation mid-record
  write_shard(records, path.string());
  {
    std::ifstream in(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(all.data(), static_cast<std::streamsize>(all.size() - 7));
  }
  CHECK_THROWS_WITH_AS(
      [&] {
        ShardReader r(path.string());
        while (r.next()) {
        }
      }(),
      doctest::Contains("record"), CorruptShard);
  std::filesystem::remove(path);
}

TEST_CASE("shuffle with capacity 1 is the identity") {
  std::vector<int> input{1, 2, 3, 4, 5, 6, 7};
  CHECK(shuffle_stream(input, 1, 99) == input);
}

TEST_CASE("shuffle output is a seed-deterministic permutation") {
  std::vector<int> input;
  for (int i = 0; i < 1000; ++i) input.push_back(i);
  auto a = shuffle_stream(input, 128, 7);
  auto b = shuffle_stream(input, 128, 7);
  CHECK(a == b);
  auto c = shuffle_stream(input, 128, 8);
  CHECK(a != c);
  CHECK(a != input);  // capacity > 1 actually shuffles

  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == input);  // multiset equality
}

TEST_CASE("downsampling keeps all positives and floor(1.5 x) negatives") {
  std::vector<int> pos, neg;
  for (int i = 0; i < 100; ++i) pos.push_back(i);
  for (int i = 0; i < 1000; ++i) neg.push_back(1000 + i);

  DownsampleStats st;
  auto combined = downsample_negatives(pos, neg, 1.5, 17, &st);
  CHECK(st.negatives_kept == 150);
  CHECK(!st.insufficient_negatives);
  REQUIRE(combined.size() == 250);
  for (int i = 0; i < 100; ++i) CHECK(combined[i] == i);  // positives once, in order
  // negatives are a strictly increasing subsequence of the originals
  for (size_t i = 101; i < combined.size(); ++i) CHECK(combined[i] > combined[i - 1]);

  CHECK(downsample_negatives(pos, neg, 0.0, 1).size() == 100);

  auto few = downsample_negatives(pos, std::vector<int>{1, 2, 3}, 1.5, 1, &st);
  CHECK(st.insufficient_negatives);
  CHECK(few.size() == 103);

  // determinism
  CHECK(downsample_negatives(pos, neg, 1.5, 17) == combined);
}

TEST_CASE("collective keys standardize color") {
  using namespace hc::chess;
  Position p = Position::startpos().apply(*parse_uci("e2e4"));   // black to move
  Position m = p.mirror_color();                                  // white to move
  CHECK(collective_key(p) == collective_key(m));
  // different positions get different keys
  Position q = Position::startpos().apply(*parse_uci("d2d4"));
  CHECK(collective_key(p) != collective_key(q));
  // counters are discarded
  Position r1 = Position::from_fen("4k3/8/8/8/8/8/4P3/4K3 w - - 13 37");
  Position r2 = Position::from_fen("4k3/8/8/8/8/8/4P3/4K3 w - - 0 1");
  CHECK(collective_key(r1) == collective_key(r2));

  // key reconstructs the normalized position
  Position back = position_from_key(collective_key(p));
  CHECK(back.side_to_move() == Color::White);
  CHECK(collective_key(back) == collective_key(p));
}

TEST_CASE("collective aggregation counts, drops, and labels exactly") {
  using namespace hc::chess;
  CollectiveAggregator agg;
  Position a = Position::startpos();
  Position b = Position::startpos().apply(*parse_uci("e2e4"));
  Position c = Position::startpos().apply(*parse_uci("d2d4"));

  // a: 12 occurrences, 2 blunders -> kept, 16.7% > 10% -> label true
  for (int i = 0; i < 10; ++i) agg.add(a, false);
  for (int i = 0; i < 2; ++i) agg.add(a, true);
  // b: 20 occurrences, 2 blunders -> kept, exactly 10% -> label false
  for (int i = 0; i < 9; ++i) agg.add(b, false);
  for (int i = 0; i < 2; ++i) agg.add(b, true);
  for (int i = 0; i < 9; ++i) agg.add(b.mirror_color(), false);  // mirrors aggregate together
  // c: exactly 10 occurrences -> dropped
  for (int i = 0; i < 10; ++i) agg.add(c, true);

  auto records = agg.finalize();
  REQUIRE(records.size() == 2);
  std::map<std::string, CollectiveRecord> by_key;
  for (const auto& r : records) by_key[r.key] = r;

  const auto& ra = by_key.at(collective_key(a));
  CHECK(ra.occurrences == 12);
  CHECK(ra.blunders == 2);
  CHECK(ra.label);
  const auto& rb = by_key.at(collective_key(b));
  CHECK(rb.occurrences == 20);
  CHECK(rb.blunders == 2);
  CHECK(!rb.label);

  std::ostringstream csv;
  write_collective_csv(records, csv);
  CHECK(csv.str().find("key,occurrences,blunders,label") == 0);
}

TEST_CASE("aggregator merge matches single-pass aggregation") {
  using namespace hc::chess;
  auto instances = sample_instances(30, 8);
  CollectiveAggregator whole, left, right;
  for (size_t i = 0; i < instances.size(); ++i) {
    const bool blunder = i % 7 == 0;
    whole.add(instances[i].history.current(), blunder);
    (i % 2 ? left : right).add(instances[i].history.current(), blunder);
  }
  left.merge(right);
  auto a = whole.finalize(0);
  auto b = left.finalize(0);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].key == b[i].key);
    CHECK(a[i].occurrences == b[i].occurrences);
    CHECK(a[i].blunders == b[i].blunders);
  }
}
