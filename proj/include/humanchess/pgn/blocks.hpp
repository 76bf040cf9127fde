#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "humanchess/util/rng.hpp"

namespace hc::pgn {

enum class BlockRole : uint8_t { Train, Validation, Unused };

inline const char* role_name(BlockRole r) {
  switch (r) {
    case BlockRole::Train: return "train";
    case BlockRole::Validation: return "validation";
    default: return "unused";
  }
}

// Year-partitioned fixed-size blocks with seeded role assignment. Games map
// to blocks by arrival order within their year; the final blocks of the last
// year are reserved for validation before training blocks are drawn.
struct SplitPlan {
  struct Block {
    int year = 0;
    int index = 0;            // within the year, by arrival order
    uint64_t game_count = 0;  // block_size except for a trailing partial block
    BlockRole role = BlockRole::Unused;
  };

  uint64_t block_size = 0;
  std::vector<Block> blocks;  // ordered by (year, index)
  std::vector<std::string> warnings;

  BlockRole role_of(int year, uint64_t index_in_year) const {
    for (const Block& b : blocks)
      if (b.year == year && b.index == static_cast<int>(index_in_year)) return b.role;
    return BlockRole::Unused;
  }
};

inline SplitPlan build_blocks(const std::map<int, uint64_t>& games_per_year, uint64_t block_size,
                              int per_year, uint64_t seed, int validation_blocks = 3) {
  SplitPlan plan;
  plan.block_size = block_size;
  if (games_per_year.empty() || block_size == 0) {
    plan.warnings.push_back("no games");
    return plan;
  }
  const int last_year = games_per_year.rbegin()->first;
  Rng rng(seed);

  for (const auto& [year, count] : games_per_year) {
    const uint64_t full = count / block_size;
    const uint64_t partial = count % block_size;
    if (full == 0)
      plan.warnings.push_back("year " + std::to_string(year) + " has fewer games than one block");

    std::vector<SplitPlan::Block> blocks;
    for (uint64_t i = 0; i < full; ++i)
      blocks.push_back({year, static_cast<int>(i), block_size, BlockRole::Unused});
    if (partial)
      blocks.push_back({year, static_cast<int>(full), partial, BlockRole::Unused});

    // last full blocks of the last year are the validation reserve
    uint64_t eligible_end = full;
    if (year == last_year) {
      const uint64_t reserve = std::min<uint64_t>(validation_blocks, full);
      for (uint64_t i = full - reserve; i < full; ++i) blocks[i].role = BlockRole::Validation;
      eligible_end = full - reserve;
      if (reserve < static_cast<uint64_t>(validation_blocks))
        plan.warnings.push_back("year " + std::to_string(year) +
                                " cannot fill the validation reserve");
    }

    // seeded draw of per_year training blocks among the remaining full ones
    std::vector<uint64_t> eligible;
    for (uint64_t i = 0; i < eligible_end; ++i) eligible.push_back(i);
    Rng year_rng = rng.fork(static_cast<uint64_t>(year));
    year_rng.shuffle(eligible);
    const size_t take = std::min<size_t>(per_year, eligible.size());
    if (take < static_cast<size_t>(per_year))
      plan.warnings.push_back("year " + std::to_string(year) + " has only " +
                              std::to_string(take) + " eligible blocks");
    std::vector<uint64_t> chosen(eligible.begin(), eligible.begin() + take);
    std::sort(chosen.begin(), chosen.end());
    for (uint64_t i : chosen) blocks[i].role = BlockRole::Train;

    for (auto& b : blocks) plan.blocks.push_back(b);
  }
  return plan;
}

}  // namespace hc::pgn
