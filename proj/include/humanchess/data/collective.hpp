#pragma once

#include <algorithm>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "humanchess/chess/position.hpp"

namespace hc::data {

// Positions recur; this groups decisions by a color-standardized key and
// labels each recurring position by whether more than `threshold` of the
// players who faced it blundered.
struct CollectiveRecord {
  std::string key;  // normalized placement + castling + en-passant file
  uint64_t occurrences = 0;
  uint64_t blunders = 0;
  bool label = false;
};

// Mirror so the side to move is white, then keep only what changes the legal
// position: placement, castling, en-passant file. Clocks and counters drop.
inline std::string collective_key(const chess::Position& p) {
  const chess::Position norm =
      p.side_to_move() == chess::Color::White ? p : p.mirror_color();
  const std::string fen = norm.to_fen();
  // placement and castling are FEN fields 1 and 3
  size_t sp1 = fen.find(' ');
  size_t sp2 = fen.find(' ', sp1 + 1);
  size_t sp3 = fen.find(' ', sp2 + 1);
  std::string key = fen.substr(0, sp1) + fen.substr(sp2, sp3 - sp2) + ' ';
  const auto ep = norm.en_passant();
  key += ep ? static_cast<char>('a' + chess::file_of(*ep)) : '-';
  return key;
}

class CollectiveAggregator {
 public:
  void add(const chess::Position& p, bool blunder) {
    auto& c = counts_[collective_key(p)];
    c.first += 1;
    c.second += blunder ? 1 : 0;
  }

  void merge(const CollectiveAggregator& other) {
    for (const auto& [key, c] : other.counts_) {
      auto& mine = counts_[key];
      mine.first += c.first;
      mine.second += c.second;
    }
  }

  // Keeps positions with occurrences strictly above min_occurrences; the
  // label rule blunders/occurrences > threshold is evaluated in integers.
  std::vector<CollectiveRecord> finalize(uint64_t min_occurrences = 10,
                                         uint64_t threshold_pct = 10) const {
    std::vector<CollectiveRecord> out;
    for (const auto& [key, c] : counts_) {
      if (c.first <= min_occurrences) continue;
      CollectiveRecord r;
      r.key = key;
      r.occurrences = c.first;
      r.blunders = c.second;
      r.label = r.blunders * 100 > r.occurrences * threshold_pct;
      out.push_back(std::move(r));
    }
    return out;  // map iteration keeps keys sorted
  }

 private:
  std::map<std::string, std::pair<uint64_t, uint64_t>> counts_;
};

inline void write_collective_csv(const std::vector<CollectiveRecord>& records, std::ostream& out) {
  out << "key,occurrences,blunders,label\n";
  for (const auto& r : records)
    out << r.key << ',' << r.occurrences << ',' << r.blunders << ',' << (r.label ? 1 : 0) << '\n';
}

// Rebuilds a Position from a collective key (white to move, counters zeroed).
inline chess::Position position_from_key(const std::string& key) {
  const size_t sp1 = key.find(' ');
  const size_t sp2 = key.find(' ', sp1 + 1);
  const std::string placement = key.substr(0, sp1);
  const std::string castling = key.substr(sp1 + 1, sp2 - sp1 - 1);
  const char ep_file = key[sp2 + 1];
  std::string ep = "-";
  if (ep_file != '-') ep = std::string{ep_file, '6'};  // white to move
  return chess::Position::from_fen(placement + " w " + castling + " " + ep + " 0 1");
}

}  // namespace hc::data
