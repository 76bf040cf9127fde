// Command-line front end: ingest -> winprob-build -> dataset-build -> train
// -> eval / baseline / uci-serve, plus synth-pgn and perft utilities. Every
// artifact gets a .prov.json sidecar with the resolved config, seed, and
// input digests.
//
// Exit codes: 0 ok, 2 usage, 3 data error, 4 engine/io error, 5 internal.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "humanchess/data/collective.hpp"
#include "humanchess/data/sampling.hpp"
#include "humanchess/data/shard.hpp"
#include "humanchess/data/shuffle.hpp"
#include "humanchess/engine/uci_client.hpp"
#include "humanchess/engine/uci_server.hpp"
#include "humanchess/eval/metrics.hpp"
#include "humanchess/eval/synthetic.hpp"
#include "humanchess/model/baselines.hpp"
#include "humanchess/model/blunder.hpp"
#include "humanchess/model/policy.hpp"
#include "humanchess/pgn/blocks.hpp"
#include "humanchess/synth/corpus.hpp"
#include "humanchess/util/digest.hpp"

using namespace hc;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- config / provenance -----------------------------------------------------

// JSON config keys mirror the long option names; command line wins. Unknown
// keys are usage errors.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("bad config JSON: " + std::string(e.what()));
  }
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = nullptr;
    try {
      opt = cmd->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw UsageError("unknown config key: " + key);
    }
    if (!opt->empty()) continue;  // command line already set it
    if (value.is_array()) {
      for (const auto& v : value)
        opt->add_result(v.is_string() ? v.get<std::string>() : v.dump());
    } else {
      opt->add_result(value.is_string() ? value.get<std::string>() : value.dump());
    }
    opt->run_callback();  // bind the config value into the target variable
  }
}

json resolved_config(const CLI::App* cmd) {
  json out;
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_name();
    if (name.empty() || name == "--help" || name == "--config") continue;
    auto results = opt->results();
    if (results.empty()) continue;
    if (results.size() == 1) out[name] = results[0];
    else out[name] = results;
  }
  return out;
}

void write_provenance(const std::string& artifact, const std::string& subcommand,
                      const json& config, uint64_t seed, const std::vector<std::string>& inputs) {
  json p;
  p["tool"] = "humanchess";
  p["version"] = kToolVersion;
  p["subcommand"] = subcommand;
  p["config"] = config;
  p["seed"] = seed;
  json digests = json::object();
  for (const auto& in : inputs) digests[in] = digest_file(in);
  p["inputs"] = digests;
  std::ofstream out(artifact + ".prov.json");
  out << p.dump(2) << '\n';
}

void log_config(const std::string& subcommand, const json& config) {
  std::cerr << "[humanchess] " << subcommand << " config: " << config.dump() << '\n';
}

// --- shared plumbing -----------------------------------------------------------

std::vector<pgn::MoveInstance> load_instances(const std::vector<std::string>& shard_paths) {
  std::vector<pgn::MoveInstance> out;
  for (const auto& path : shard_paths) {
    data::ShardReader reader(path);
    while (auto rec = reader.next()) out.push_back(rec->to_instance());
  }
  return out;
}

std::vector<data::ShardRecord> load_records(const std::vector<std::string>& shard_paths) {
  std::vector<data::ShardRecord> out;
  for (const auto& path : shard_paths) {
    data::ShardReader reader(path);
    while (auto rec = reader.next()) out.push_back(std::move(*rec));
  }
  return out;
}

model::BlunderSample record_to_sample(const data::ShardRecord& rec, bool with_metadata,
                                      const winprob::WinProbTable* table) {
  return model::make_blunder_sample(rec.to_instance(), with_metadata, table);
}

nn::LrSchedule make_schedule(double lr, double factor, std::vector<uint64_t> drops) {
  nn::LrSchedule s;
  s.initial = lr;
  s.factor = factor;
  s.drop_steps = std::move(drops);
  return s;
}

// --- subcommand bodies ---------------------------------------------------------

int run_synth_pgn(const std::string& out_path, int games, uint64_t seed, int years,
                  int first_year, double eval_fraction) {
  synth::CorpusConfig cfg;
  cfg.games = games;
  cfg.seed = seed;
  cfg.years = years;
  cfg.first_year = first_year;
  cfg.eval_fraction = eval_fraction;
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  synth::write_corpus(synth::generate_corpus(cfg), out, seed ^ 0x9e3779b9ULL);
  std::cerr << "[humanchess] wrote " << games << " games to " << out_path << '\n';
  return 0;
}

struct IngestOptions {
  std::string pgn_path;
  std::string out_shard;
  std::string summary_csv;
  pgn::FilterPolicy policy;
  uint64_t seed = 1;
  uint64_t block_size = 0;  // 0 = no block split
  int blocks_per_year = 20;
  int validation_blocks = 3;
  std::string out_valid;
};

int run_ingest(const IngestOptions& opt) {
  std::ifstream in(opt.pgn_path);
  if (!in) throw DataError("cannot read " + opt.pgn_path);

  // when block splitting is on, a first pass counts games per year
  pgn::SplitPlan plan;
  if (opt.block_size > 0) {
    std::map<int, uint64_t> per_year;
    pgn::PgnReader counter(in);
    while (auto g = counter.next()) per_year[g->header.date.year] += 1;
    plan = pgn::build_blocks(per_year, opt.block_size, opt.blocks_per_year, opt.seed,
                             opt.validation_blocks);
    for (const auto& w : plan.warnings) std::cerr << "[humanchess] warning: " << w << '\n';
    in.clear();
    in.seekg(0);
  }

  pgn::PgnReader reader(in);
  data::ShardWriter train_writer(opt.out_shard);
  std::optional<data::ShardWriter> valid_writer;
  if (opt.block_size > 0 && !opt.out_valid.empty()) valid_writer.emplace(opt.out_valid);

  std::map<std::string, uint64_t> skips;
  std::map<int, uint64_t> bin_counts;
  std::map<int, uint64_t> seen_per_year;
  uint64_t games = 0, instances = 0;

  while (auto g = reader.next()) {
    ++games;
    pgn::BlockRole role = pgn::BlockRole::Train;
    if (opt.block_size > 0) {
      const uint64_t index_in_year = seen_per_year[g->header.date.year]++;
      role = plan.role_of(g->header.date.year, index_in_year / opt.block_size);
      if (role == pgn::BlockRole::Unused) {
        ++skips["unused_block"];
        continue;
      }
      if (role == pgn::BlockRole::Validation && !valid_writer) {
        ++skips["unused_block"];
        continue;
      }
    }
    pgn::ExtractStats st;
    std::vector<pgn::MoveInstance> batch;
    try {
      batch = pgn::extract_instances(*g, opt.policy, &st);
    } catch (const pgn::ReplayFailure&) {
      ++skips["replay_failure"];
      continue;
    }
    if (st.game_skip) {
      ++skips[st.game_skip];
      continue;
    }
    if (auto bin = pgn::bin_for_game(g->header)) bin_counts[bin->lower] += batch.size();
    for (const auto& inst : batch) {
      auto& writer =
          (role == pgn::BlockRole::Validation && valid_writer) ? *valid_writer : train_writer;
      writer.add(data::ShardRecord::from_instance(inst));
      ++instances;
    }
  }
  for (const auto& [reason, count] : reader.skip_counts()) skips[reason] += count;
  train_writer.close();
  if (valid_writer) valid_writer->close();

  if (!opt.summary_csv.empty()) {
    std::ofstream csv(opt.summary_csv);
    csv << "kind,key,count\n";
    csv << "total,games," << games << '\n';
    csv << "total,instances," << instances << '\n';
    for (const auto& [reason, count] : skips) csv << "skip," << reason << ',' << count << '\n';
    for (const auto& [bin, count] : bin_counts) csv << "bin," << bin << ',' << count << '\n';
  }
  std::cerr << "[humanchess] ingest: " << games << " games -> " << instances << " instances\n";
  return 0;
}

int run_winprob_build(const std::vector<std::string>& shards, const std::string& out_path,
                      uint64_t min_samples) {
  winprob::WinProbTable table;
  table.set_min_samples(min_samples);
  uint64_t used = 0;
  for (const auto& path : shards) {
    data::ShardReader reader(path);
    while (auto rec = reader.next()) {
      if (rec->eval_after == data::kAbsentEval) continue;
      const auto inst = rec->to_instance();
      // the observation pairs the post-move eval with the game outcome
      const double white_outcome = inst.mover() == chess::Color::White
                                       ? inst.result_for_mover
                                       : 1.0 - inst.result_for_mover;
      table.add({*inst.eval_after, white_outcome});
      ++used;
    }
  }
  if (table.empty()) throw DataError("no eval-annotated records in the input shards");
  table.save_csv(out_path);
  std::cerr << "[humanchess] winprob table from " << used << " observations -> " << out_path
            << '\n';
  return 0;
}

int run_dataset_policy(const std::vector<std::string>& shards, const std::string& out_train,
                       const std::string& out_valid, double valid_fraction, size_t shuffle_capacity,
                       uint64_t seed) {
  auto records = load_records(shards);
  if (records.empty()) throw DataError("no input records");
  records = data::shuffle_stream(std::move(records), shuffle_capacity, seed);
  const size_t valid_n = static_cast<size_t>(valid_fraction * records.size());
  data::ShardWriter valid(out_valid.empty() ? out_train + ".valid" : out_valid);
  data::ShardWriter train(out_train);
  for (size_t i = 0; i < records.size(); ++i)
    (i < valid_n ? valid : train).add(records[i]);
  train.close();
  valid.close();
  std::cerr << "[humanchess] policy dataset: " << records.size() - valid_n << " train / "
            << valid_n << " validation\n";
  return 0;
}

int run_dataset_blunder(const std::vector<std::string>& shards, const std::string& winprob_path,
                        const std::string& out_path, double tau, double ratio, uint64_t seed) {
  auto table = winprob::WinProbTable::load_csv_file(winprob_path);
  std::vector<data::ShardRecord> pos, neg;
  uint64_t missing = 0;
  for (auto& rec : load_records(shards)) {
    if (rec.eval_before == data::kAbsentEval || rec.eval_after == data::kAbsentEval) {
      ++missing;
      continue;
    }
    const auto inst = rec.to_instance();
    const bool blunder =
        winprob::label_blunder(*inst.eval_before, *inst.eval_after, inst.mover(), table, {tau});
    rec.blunder = blunder ? 1 : 0;
    (blunder ? pos : neg).push_back(std::move(rec));
  }
  if (pos.empty() && neg.empty()) throw DataError("no labelable records (evals missing)");
  data::DownsampleStats st;
  auto combined = data::downsample_negatives(pos, neg, ratio, seed, &st);
  if (st.insufficient_negatives)
    std::cerr << "[humanchess] warning: fewer negatives than the requested ratio\n";
  data::ShardWriter writer(out_path);
  for (const auto& rec : combined) writer.add(rec);
  writer.close();
  std::cerr << "[humanchess] blunder dataset: " << pos.size() << " blunders, "
            << st.negatives_kept << " of " << st.negatives_seen << " non-blunders kept, "
            << missing << " unlabeled skipped\n";
  return 0;
}

int run_dataset_collective(const std::vector<std::string>& shards, const std::string& out_csv,
                           const std::string& out_shard, uint64_t min_occurrences,
                           uint64_t threshold_pct) {
  data::CollectiveAggregator agg;
  uint64_t used = 0, unlabeled = 0;
  for (const auto& path : shards) {
    data::ShardReader reader(path);
    while (auto rec = reader.next()) {
      if (rec->blunder == 255) {
        ++unlabeled;
        continue;
      }
      agg.add(rec->to_instance().history.current(), rec->blunder == 1);
      ++used;
    }
  }
  if (used == 0) throw DataError("no labeled records in the input shards");
  auto records = agg.finalize(min_occurrences, threshold_pct);
  std::ofstream csv(out_csv);
  if (!csv) throw DataError("cannot write " + out_csv);
  data::write_collective_csv(records, csv);

  if (!out_shard.empty()) {
    // grouped boards as board-only training records
    data::ShardWriter writer(out_shard);
    for (const auto& r : records) {
      data::ShardRecord rec;
      const auto pos = data::position_from_key(r.key);
      rec.fen = pos.to_fen();
      rec.played = "0000";
      rec.blunder = r.label ? 1 : 0;
      writer.add(rec);
    }
    writer.close();
  }
  std::cerr << "[humanchess] collective: " << records.size() << " positions kept from " << used
            << " labeled instances (" << unlabeled << " unlabeled skipped)\n";
  return 0;
}

// shared flags for train/baseline feature construction
struct BlunderFeatureOptions {
  bool with_metadata = false;
  std::string winprob_path;
};

std::vector<model::BlunderSample> load_blunder_samples(const std::vector<std::string>& shards,
                                                       const BlunderFeatureOptions& opt) {
  std::optional<winprob::WinProbTable> table;
  if (!opt.winprob_path.empty()) table = winprob::WinProbTable::load_csv_file(opt.winprob_path);
  std::vector<model::BlunderSample> out;
  for (const auto& path : shards) {
    data::ShardReader reader(path);
    while (auto rec = reader.next()) {
      if (rec->blunder == 255) continue;
      // collective shards carry a placeholder move; build from the key position
      if (rec->played == "0000") {
        model::BlunderSample s;
        s.planes = encode::encode_blunder_input(
            chess::Position::from_fen(rec->fen),
            opt.with_metadata ? std::optional<encode::MetadataVector>(encode::MetadataVector{})
                              : std::nullopt,
            table ? &*table : nullptr);
        s.label = rec->blunder;
        out.push_back(std::move(s));
      } else {
        out.push_back(record_to_sample(*rec, opt.with_metadata, table ? &*table : nullptr));
      }
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"human chess behavior toolkit"};
  app.require_subcommand(1);
  std::string config_path;

  // ---- synth-pgn ----
  auto* synth_cmd = app.add_subcommand("synth-pgn", "generate a synthetic Lichess-format corpus");
  std::string synth_out = "corpus.pgn";
  int synth_games = 1000, synth_years = 1, synth_first_year = 2019;
  uint64_t synth_seed = 1;
  double synth_eval_fraction = 0.6;
  synth_cmd->add_option("--out", synth_out);
  synth_cmd->add_option("--games", synth_games);
  synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("--years", synth_years);
  synth_cmd->add_option("--first-year", synth_first_year);
  synth_cmd->add_option("--eval-fraction", synth_eval_fraction);
  synth_cmd->add_option("--config", config_path);

  // ---- ingest ----
  auto* ingest_cmd = app.add_subcommand("ingest", "parse and filter a PGN archive into shards");
  IngestOptions ing;
  std::string cutoff_mode = "either";
  ingest_cmd->add_option("--pgn", ing.pgn_path)->required();
  ingest_cmd->add_option("--out", ing.out_shard)->required();
  ingest_cmd->add_option("--out-valid", ing.out_valid);
  ingest_cmd->add_option("--summary", ing.summary_csv);
  ingest_cmd->add_option("--min-duration", ing.policy.min_estimated_duration);
  ingest_cmd->add_option("--min-clock", ing.policy.min_clock);
  ingest_cmd->add_option("--skip-opening", ing.policy.skip_opening_ply);
  ingest_cmd->add_flag("--same-bin", ing.policy.require_same_bin);
  ingest_cmd->add_flag("--require-evals", ing.policy.require_evals);
  ingest_cmd->add_option("--cutoff-mode", cutoff_mode)->check(CLI::IsMember({"mover", "either"}));
  ingest_cmd->add_option("--seed", ing.seed);
  ingest_cmd->add_option("--block-size", ing.block_size);
  ingest_cmd->add_option("--blocks-per-year", ing.blocks_per_year);
  ingest_cmd->add_option("--validation-blocks", ing.validation_blocks);
  ingest_cmd->add_option("--config", config_path);

  // ---- winprob-build ----
  auto* wp_cmd = app.add_subcommand("winprob-build", "build the centipawn to win probability table");
  std::vector<std::string> wp_shards;
  std::string wp_out = "winprob.csv";
  uint64_t wp_min_samples = 1;
  wp_cmd->add_option("--shards", wp_shards)->required();
  wp_cmd->add_option("--out", wp_out);
  wp_cmd->add_option("--min-samples", wp_min_samples);
  wp_cmd->add_option("--config", config_path);

  // ---- dataset-build ----
  auto* ds_cmd = app.add_subcommand("dataset-build", "assemble training datasets from shards");
  std::string ds_kind;
  std::vector<std::string> ds_shards;
  std::string ds_out, ds_out_valid, ds_winprob, ds_out_shard;
  double ds_valid_fraction = 0.1, ds_tau = 0.10, ds_ratio = 1.5;
  uint64_t ds_seed = 1, ds_min_occurrences = 10, ds_threshold_pct = 10;
  size_t ds_shuffle_capacity = 250000;
  ds_cmd->add_option("--kind", ds_kind)->required()->check(CLI::IsMember({"policy", "blunder", "collective"}));
  ds_cmd->add_option("--shards", ds_shards)->required();
  ds_cmd->add_option("--out", ds_out)->required();
  ds_cmd->add_option("--out-valid", ds_out_valid);
  ds_cmd->add_option("--out-shard", ds_out_shard);
  ds_cmd->add_option("--winprob", ds_winprob);
  ds_cmd->add_option("--valid-fraction", ds_valid_fraction);
  ds_cmd->add_option("--tau", ds_tau);
  ds_cmd->add_option("--ratio", ds_ratio);
  ds_cmd->add_option("--shuffle-capacity", ds_shuffle_capacity);
  ds_cmd->add_option("--min-occurrences", ds_min_occurrences);
  ds_cmd->add_option("--threshold-pct", ds_threshold_pct);
  ds_cmd->add_option("--seed", ds_seed);
  ds_cmd->add_option("--config", config_path);

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train a policy or blunder model");
  std::string tr_kind, tr_out = "model.ckpt", tr_metrics;
  std::vector<std::string> tr_train, tr_valid;
  uint64_t tr_seed = 1, tr_steps = 2000, tr_eval_every = 200;
  int tr_blocks = 2, tr_channels = 16, tr_batch = 32, tr_early_stop = 0;
  double tr_lr = 0.01, tr_lr_factor = 0.1, tr_sample_prob = 1.0;
  size_t tr_shuffle_capacity = 4096;
  std::vector<uint64_t> tr_lr_drops;
  bool tr_no_mask = false, tr_no_history = false, tr_with_metadata = false;
  std::string tr_winprob;
  train_cmd->add_option("--kind", tr_kind)
      ->required()
      ->check(CLI::IsMember({"policy", "blunder-cnn", "blunder-fc"}));
  train_cmd->add_option("--train", tr_train)->required();
  train_cmd->add_option("--valid", tr_valid);
  train_cmd->add_option("--out", tr_out);
  train_cmd->add_option("--metrics", tr_metrics);
  train_cmd->add_option("--seed", tr_seed);
  train_cmd->add_option("--steps", tr_steps);
  train_cmd->add_option("--blocks", tr_blocks);
  train_cmd->add_option("--channels", tr_channels);
  train_cmd->add_option("--batch", tr_batch);
  train_cmd->add_option("--lr", tr_lr);
  train_cmd->add_option("--lr-factor", tr_lr_factor);
  train_cmd->add_option("--lr-drops", tr_lr_drops);
  train_cmd->add_option("--sample-prob", tr_sample_prob);
  train_cmd->add_option("--shuffle-capacity", tr_shuffle_capacity);
  train_cmd->add_option("--eval-every", tr_eval_every);
  train_cmd->add_option("--early-stop", tr_early_stop);
  train_cmd->add_flag("--no-mask", tr_no_mask);
  train_cmd->add_flag("--no-history", tr_no_history);
  train_cmd->add_flag("--with-metadata", tr_with_metadata);
  train_cmd->add_option("--winprob", tr_winprob);
  train_cmd->add_option("--config", config_path);

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "evaluate predictors and blunder models");
  std::string ev_kind, ev_out = "eval.csv", ev_engine, ev_mode = "complexity", ev_winprob;
  std::vector<std::string> ev_test, ev_ckpts;
  int ev_engine_depth = 2, ev_multipv = 2;
  double ev_width = 0.05;
  uint64_t ev_limit = 0;
  eval_cmd->add_option("--kind", ev_kind)
      ->required()
      ->check(CLI::IsMember({"curve", "agreement", "decompose", "blunder"}));
  eval_cmd->add_option("--test", ev_test)->required();
  eval_cmd->add_option("--ckpt", ev_ckpts);
  eval_cmd->add_option("--engine", ev_engine);
  eval_cmd->add_option("--engine-depth", ev_engine_depth);
  eval_cmd->add_option("--multipv", ev_multipv);
  eval_cmd->add_option("--winprob", ev_winprob);
  eval_cmd->add_option("--mode", ev_mode)->check(CLI::IsMember({"complexity", "quality"}));
  eval_cmd->add_option("--width", ev_width);
  eval_cmd->add_option("--limit", ev_limit);
  eval_cmd->add_option("--out", ev_out);
  eval_cmd->add_option("--config", config_path);

  // ---- baseline ----
  auto* base_cmd = app.add_subcommand("baseline", "train and score classical baselines");
  std::string bl_kind, bl_out = "baseline.csv";
  std::vector<std::string> bl_train, bl_test;
  bool bl_with_metadata = false;
  std::string bl_winprob;
  uint64_t bl_seed = 1;
  double bl_valid_fraction = 0.2;
  base_cmd->add_option("--kind", bl_kind)->required()->check(CLI::IsMember({"logit", "forest"}));
  base_cmd->add_option("--train", bl_train)->required();
  base_cmd->add_option("--test", bl_test)->required();
  base_cmd->add_option("--out", bl_out);
  base_cmd->add_flag("--with-metadata", bl_with_metadata);
  base_cmd->add_option("--winprob", bl_winprob);
  base_cmd->add_option("--valid-fraction", bl_valid_fraction);
  base_cmd->add_option("--seed", bl_seed);
  base_cmd->add_option("--config", config_path);

  // ---- uci-serve ----
  auto* serve_cmd = app.add_subcommand("uci-serve", "expose a policy checkpoint as a UCI engine");
  std::string sv_ckpt;
  serve_cmd->add_option("--checkpoint", sv_ckpt)->required();
  serve_cmd->add_option("--config", config_path);

  // ---- perft ----
  auto* perft_cmd = app.add_subcommand("perft", "legal move tree leaf count");
  std::string pf_fen = chess::Position::kStartFen;
  int pf_depth = 5;
  perft_cmd->add_option("--fen", pf_fen);
  perft_cmd->add_option("--depth", pf_depth);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return app.exit(e) == 0 ? 0 : 2;
    }
    CLI::App* active = app.get_subcommands().front();
    if (!config_path.empty()) apply_config_file(active, config_path);
    const json config = resolved_config(active);
    log_config(active->get_name(), config);

    if (active == synth_cmd) {
      run_synth_pgn(synth_out, synth_games, synth_seed, synth_years, synth_first_year,
                    synth_eval_fraction);
      write_provenance(synth_out, "synth-pgn", config, synth_seed, {});
      return 0;
    }

    if (active == ingest_cmd) {
      ing.policy.cutoff_mode = cutoff_mode == "mover" ? pgn::ClockCutoffMode::MoverOnly
                                                      : pgn::ClockCutoffMode::EitherRestOfGame;
      run_ingest(ing);
      write_provenance(ing.out_shard, "ingest", config, ing.seed, {ing.pgn_path});
      return 0;
    }

    if (active == wp_cmd) {
      run_winprob_build(wp_shards, wp_out, wp_min_samples);
      write_provenance(wp_out, "winprob-build", config, 0, wp_shards);
      return 0;
    }

    if (active == ds_cmd) {
      if (ds_kind == "policy") {
        run_dataset_policy(ds_shards, ds_out, ds_out_valid, ds_valid_fraction, ds_shuffle_capacity,
                           ds_seed);
      } else if (ds_kind == "blunder") {
        if (ds_winprob.empty()) throw UsageError("--winprob is required for --kind blunder");
        run_dataset_blunder(ds_shards, ds_winprob, ds_out, ds_tau, ds_ratio, ds_seed);
      } else {
        run_dataset_collective(ds_shards, ds_out, ds_out_shard, ds_min_occurrences,
                               ds_threshold_pct);
      }
      write_provenance(ds_out, "dataset-build", config, ds_seed, ds_shards);
      return 0;
    }

    if (active == train_cmd) {
      if (tr_kind == "policy") {
        model::PolicyNetConfig cfg;
        cfg.blocks = tr_blocks;
        cfg.channels = tr_channels;
        cfg.policy_head_channels = std::max(8, tr_channels);
        cfg.value_head_channels = std::max(4, tr_channels / 2);
        cfg.batch_size = tr_batch;
        cfg.steps = tr_steps;
        cfg.sample_probability = tr_sample_prob;
        cfg.shuffle_capacity = tr_shuffle_capacity;
        cfg.schedule = make_schedule(tr_lr, tr_lr_factor, tr_lr_drops);
        cfg.mask_policy_loss = !tr_no_mask;
        cfg.include_history = !tr_no_history;
        cfg.eval_every = tr_eval_every;
        auto train_set = load_instances(tr_train);
        auto valid_set = load_instances(tr_valid);
        auto result = model::train_policy(train_set, valid_set, cfg, tr_seed);
        result.model.save(tr_out, {{"seed", tr_seed}});
        if (!tr_metrics.empty()) {
          std::ofstream m(tr_metrics);
          model::write_metrics_csv(result.metrics, m);
          write_provenance(tr_metrics, "train", config, tr_seed, tr_train);
        }
      } else {
        model::BlunderNetConfig cfg;
        cfg.cnn = tr_kind == "blunder-cnn";
        cfg.blocks = tr_blocks;
        cfg.channels = tr_channels;
        cfg.with_metadata = tr_with_metadata;
        cfg.batch_size = tr_batch;
        cfg.steps = tr_steps;
        cfg.schedule = make_schedule(tr_lr, tr_lr_factor, tr_lr_drops);
        cfg.eval_every = tr_eval_every;
        cfg.early_stop_evals = tr_early_stop;
        BlunderFeatureOptions fopt{tr_with_metadata, tr_winprob};
        auto train_set = load_blunder_samples(tr_train, fopt);
        auto valid_set = load_blunder_samples(tr_valid, fopt);
        auto result = model::train_blunder(train_set, valid_set, cfg, tr_seed);
        result.model.save(tr_out, {{"seed", tr_seed}});
        if (!tr_metrics.empty()) {
          std::ofstream m(tr_metrics);
          model::write_metrics_csv(result.metrics, m);
          write_provenance(tr_metrics, "train", config, tr_seed, tr_train);
        }
      }
      write_provenance(tr_out, "train", config, tr_seed, tr_train);
      return 0;
    }

    if (active == eval_cmd) {
      std::ofstream out(ev_out);
      if (!out) throw DataError("cannot write " + ev_out);

      if (ev_kind == "blunder") {
        if (ev_ckpts.empty()) throw UsageError("--ckpt required for --kind blunder");
        out << "model,n,auc,accuracy\n";
        for (const auto& ckpt : ev_ckpts) {
          auto m = model::BlunderModel::load(ckpt);
          BlunderFeatureOptions fopt{m.with_metadata(), ev_winprob};
          auto samples = load_blunder_samples(ev_test, fopt);
          if (ev_limit && samples.size() > ev_limit) samples.resize(ev_limit);
          if (samples.empty()) throw DataError("no labeled test samples");
          const auto scores_f = m.score(samples);
          std::vector<double> scores(scores_f.begin(), scores_f.end());
          std::vector<uint8_t> labels;
          for (const auto& s : samples) labels.push_back(s.label);
          char buf[96];
          std::snprintf(buf, sizeof buf, ",%zu,%.9g,%.9g\n", samples.size(),
                        eval::auc(scores, labels), eval::accuracy_at(0.5, scores, labels));
          out << std::filesystem::path(ckpt).stem().string() << buf;
        }
        write_provenance(ev_out, "eval", config, 0, ev_test);
        return 0;
      }

      auto instances = load_instances(ev_test);
      if (ev_limit && instances.size() > ev_limit) instances.resize(ev_limit);
      if (instances.empty()) throw DataError("no test instances");

      std::vector<eval::PredictorPtr> owned;
      std::optional<engine::EngineHandle> engine_handle;
      for (const auto& ckpt : ev_ckpts)
        owned.push_back(std::make_unique<model::PolicyPredictor>(
            model::PolicyModel::load(ckpt), std::filesystem::path(ckpt).stem().string()));
      if (!ev_engine.empty()) {
        engine_handle.emplace(ev_engine);
        owned.push_back(std::make_unique<engine::EnginePredictor>(
            *engine_handle, ev_engine_depth,
            std::filesystem::path(ev_engine).stem().string() + "-d" +
                std::to_string(ev_engine_depth)));
      }
      if (owned.empty()) throw UsageError("need at least one --ckpt or --engine");

      if (ev_kind == "curve") {
        auto sets = eval::split_by_bin(std::move(instances));
        std::vector<eval::CurveRow> rows;
        for (auto& pred : owned)
          for (auto& row : eval::prediction_curve(*pred, sets)) rows.push_back(row);
        eval::write_curve_csv(rows, out);
        std::ofstream maxima_out(ev_out + ".maxima.csv");
        eval::write_maxima_csv(eval::model_maxima(rows), maxima_out);
      } else if (ev_kind == "agreement") {
        eval::TestSet ts{{0}, std::move(instances)};
        std::vector<eval::Predictor*> preds;
        for (auto& p : owned) preds.push_back(p.get());
        eval::write_agreement_csv(eval::agreement_matrix(preds, ts), out);
      } else {  // decompose
        if (ev_engine.empty()) throw UsageError("--engine required for --kind decompose");
        if (ev_winprob.empty()) throw UsageError("--winprob required for --kind decompose");
        auto table = winprob::WinProbTable::load_csv_file(ev_winprob);
        eval::TestSet ts{{0}, std::move(instances)};
        std::vector<eval::RefEvals> refs;
        for (const auto& inst : ts.instances) {
          const auto& pos = inst.history.current();
          const auto result = engine_handle->evaluate(pos, ev_engine_depth, ev_multipv);
          if (result.ranked.empty()) throw DataError("engine returned no ranked moves");
          const chess::Color mover = pos.side_to_move();
          auto to_wp = [&](const pgn::EvalScore& s) {
            const int cp_mover = s.as_cp();
            const int cp_white = mover == chess::Color::White ? cp_mover : -cp_mover;
            return table.win_prob_for_mover(cp_white, mover);
          };
          eval::RefEvals re;
          re.best = to_wp(result.ranked[0].score);
          re.second = result.ranked.size() > 1 ? to_wp(result.ranked[1].score) : re.best;
          re.played = re.best;
          if (!(inst.played == result.ranked[0].move)) {
            if (result.ranked.size() > 1 && inst.played == result.ranked[1].move) {
              re.played = re.second;
            } else {
              // score the played move from the child position
              const auto after = pos.apply(inst.played);
              const auto child =
                  engine_handle->evaluate(after, std::max(1, ev_engine_depth - 1), 1);
              int cp_opp = child.ranked.empty() ? 0 : child.ranked[0].score.as_cp();
              if (after.legal_moves().empty()) cp_opp = after.in_check() ? -winprob::kMateCp : 0;
              const int cp_mover = -cp_opp;
              const int cp_white = mover == chess::Color::White ? cp_mover : -cp_mover;
              re.played = table.win_prob_for_mover(cp_white, mover);
            }
          }
          refs.push_back(re);
        }
        const auto mode =
            ev_mode == "complexity" ? eval::DecomposeMode::Complexity : eval::DecomposeMode::Quality;
        eval::write_decomposition_csv(eval::decompose(*owned.front(), ts, refs, mode, ev_width),
                                      out);
      }
      write_provenance(ev_out, "eval", config, 0, ev_test);
      return 0;
    }

    if (active == base_cmd) {
      BlunderFeatureOptions fopt{bl_with_metadata, bl_winprob};
      auto train_samples = load_blunder_samples(bl_train, fopt);
      auto test_samples = load_blunder_samples(bl_test, fopt);
      if (train_samples.empty() || test_samples.empty())
        throw DataError("baseline needs labeled train and test samples");

      // seeded validation split for model selection
      Rng rng(bl_seed);
      rng.shuffle(train_samples);
      const size_t valid_n = static_cast<size_t>(bl_valid_fraction * train_samples.size());
      std::vector<std::vector<float>> x_train, x_valid, x_test;
      std::vector<uint8_t> y_train, y_valid, y_test;
      for (size_t i = 0; i < train_samples.size(); ++i) {
        auto& dst_x = i < valid_n ? x_valid : x_train;
        auto& dst_y = i < valid_n ? y_valid : y_train;
        dst_x.push_back(std::move(train_samples[i].planes));
        dst_y.push_back(train_samples[i].label);
      }
      for (auto& s : test_samples) {
        x_test.push_back(std::move(s.planes));
        y_test.push_back(s.label);
      }
      const auto stats = model::analyze_features(x_train);
      if (stats.constant_columns)
        std::cerr << "[humanchess] note: " << stats.constant_columns << " constant feature columns\n";

      std::ofstream out(bl_out);
      out << "model,params,valid_auc,test_auc,test_accuracy\n";
      auto evaluate = [&](const std::string& name, const std::string& params, auto&& scorer) {
        std::vector<double> vs, tsc;
        for (const auto& x : x_valid) vs.push_back(scorer(x));
        for (const auto& x : x_test) tsc.push_back(scorer(x));
        const double vauc = x_valid.empty() ? 0.5 : eval::auc(vs, y_valid);
        char buf[128];
        std::snprintf(buf, sizeof buf, ",%s,%.9g,%.9g,%.9g\n", params.c_str(), vauc,
                      eval::auc(tsc, y_test), eval::accuracy_at(0.5, tsc, y_test));
        out << name << buf;
        return vauc;
      };

      if (bl_kind == "logit") {
        auto m = model::train_logit(x_train, y_train);
        evaluate("logit", "gd", [&](const std::vector<float>& x) { return m.score(x); });
      } else {
        // grid search, validation AUC selects the reported forest
        double best_auc = -1;
        std::string best_params;
        for (int trees : {50, 100, 200}) {
          for (int depth : {8, 16, 0}) {
            model::ForestConfig fc;
            fc.trees = trees;
            fc.max_depth = depth;
            fc.seed = bl_seed;
            auto forest = model::train_forest(x_train, y_train, fc);
            const std::string params =
                "trees=" + std::to_string(trees) + ";depth=" + std::to_string(depth);
            const double vauc = evaluate(
                "forest", params, [&](const std::vector<float>& x) { return forest.score(x); });
            if (vauc > best_auc) {
              best_auc = vauc;
              best_params = params;
            }
          }
        }
        out << "selected," << best_params << ',' << best_auc << ",,\n";
      }
      write_provenance(bl_out, "baseline", config, bl_seed, bl_train);
      return 0;
    }

    if (active == serve_cmd) {
      engine::UciServer server(model::PolicyModel::load(sv_ckpt));
      server.serve(std::cin, std::cout);
      return 0;
    }

    if (active == perft_cmd) {
      const auto pos = chess::Position::from_fen(pf_fen);
      for (int d = 1; d <= pf_depth; ++d)
        std::cout << "perft(" << d << ") = " << pos.perft(d) << std::endl;
      return 0;
    }
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error(usage): " << e.what() << '\n';
    return 2;
  } catch (const CLI::Error& e) {
    std::cerr << "error(usage): " << e.what() << '\n';
    return 2;
  } catch (const chess::MalformedFen& e) {
    std::cerr << "error(data): " << e.what() << '\n';
    return 3;
  } catch (const chess::IllegalPosition& e) {
    std::cerr << "error(data): " << e.what() << '\n';
    return 3;
  } catch (const pgn::StreamCorrupt& e) {
    std::cerr << "error(data): " << e.what() << '\n';
    return 3;
  } catch (const data::CorruptShard& e) {
    std::cerr << "error(data): " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error(data): " << e.what() << '\n';
    return 3;
  } catch (const winprob::EmptyInput& e) {
    std::cerr << "error(data): " << e.what() << '\n';
    return 3;
  } catch (const model::EmptyStream& e) {
    std::cerr << "error(data): " << e.what() << '\n';
    return 3;
  } catch (const model::OneClassOnly& e) {
    std::cerr << "error(data): " << e.what() << '\n';
    return 3;
  } catch (const engine::SpawnFailure& e) {
    std::cerr << "error(engine): " << e.what() << '\n';
    return 4;
  } catch (const engine::EngineDied& e) {
    std::cerr << "error(engine): " << e.what() << '\n';
    return 4;
  } catch (const engine::HandshakeTimeout& e) {
    std::cerr << "error(engine): " << e.what() << '\n';
    return 4;
  } catch (const engine::SearchTimeout& e) {
    std::cerr << "error(engine): " << e.what() << '\n';
    return 4;
  } catch (const engine::ParseError& e) {
    std::cerr << "error(engine): " << e.what() << '\n';
    return 4;
  } catch (const nn::IoFailure& e) {
    std::cerr << "error(engine): " << e.what() << '\n';
    return 4;
  } catch (const data::IoFailure& e) {
    std::cerr << "error(engine): " << e.what() << '\n';
    return 4;
  } catch (const nn::CorruptCheckpoint& e) {
    std::cerr << "error(data): " << e.what() << '\n';
    return 3;
  } catch (const nn::VersionMismatch& e) {
    std::cerr << "error(data): " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error(internal): " << e.what() << '\n';
    return 5;
  }
}
