#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "humanchess/chess/types.hpp"

namespace hc::winprob {

// Engine evals are centipawns from white's perspective; mates collapse to
// the +-9999 sentinels before any table arithmetic.
constexpr int kMateCp = 9999;

inline int clamp_cp(int cp) { return std::clamp(cp, -kMateCp, kMateCp); }

struct EvalObservation {
  int cp = 0;                      // white's perspective
  double outcome_for_white = 0.5;  // 0, 0.5, 1
};

struct EmptyInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingEval : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Round to nearest multiple of 10, half away from zero.
inline int cp_bucket(int cp) {
  const int a = std::abs(cp);
  const int b = (a + 5) / 10 * 10;
  return cp < 0 ? -b : b;
}

// Empirical centipawn -> win probability map in 10 cp buckets. Draws count
// as half wins, so probabilities complement exactly across colors.
class WinProbTable {
 public:
  struct Bucket {
    double wins = 0.0;  // in half-point units, exact multiples of 0.5
    uint64_t total = 0;
    double probability() const { return wins / static_cast<double>(total); }
  };

  void add(const EvalObservation& obs) {
    Bucket& b = buckets_[cp_bucket(clamp_cp(obs.cp))];
    b.wins += obs.outcome_for_white;
    b.total += 1;
  }

  void merge(const WinProbTable& other) {
    for (const auto& [center, b] : other.buckets_) {
      Bucket& mine = buckets_[center];
      mine.wins += b.wins;
      mine.total += b.total;
    }
  }

  void set_min_samples(uint64_t n) { min_samples_ = n; }
  uint64_t min_samples() const { return min_samples_; }
  const std::map<int, Bucket>& buckets() const { return buckets_; }
  bool empty() const { return buckets_.empty(); }

  // White's win probability. Sparse buckets clamp to the nearest populated
  // one; the tie at equal distance resolves toward the lower center.
  double lookup(int cp) const {
    if (cp >= kMateCp) return 1.0;
    if (cp <= -kMateCp) return 0.0;
    if (buckets_.empty()) throw EmptyInput("win probability table is empty");
    const int want = cp_bucket(cp);
    auto it = buckets_.find(want);
    if (it != buckets_.end() && it->second.total >= min_samples_) return it->second.probability();

    const Bucket* best = nullptr;
    long best_dist = 0;
    for (const auto& [center, b] : buckets_) {
      if (b.total < min_samples_) continue;
      const long dist = std::abs(static_cast<long>(center) - want);
      if (!best || dist < best_dist) {
        best = &b;
        best_dist = dist;
      }
    }
    if (!best) throw EmptyInput("no bucket reaches the sample floor");
    return best->probability();
  }

  double win_prob_for_mover(int cp_white, chess::Color mover) const {
    const double w = lookup(cp_white);
    return mover == chess::Color::White ? w : 1.0 - w;
  }

  // CSV: bucket_center_cp,wins,total,probability. Wins are half-point
  // multiples, printed with one decimal so the reload is exact.
  void save_csv(std::ostream& out) const {
    out << "bucket_center_cp,wins,total,probability\n";
    for (const auto& [center, b] : buckets_) {
      std::ostringstream w;
      w << std::fixed;
      w.precision(1);
      w << b.wins;
      std::ostringstream p;
      p.precision(17);
      p << b.probability();
      out << center << ',' << w.str() << ',' << b.total << ',' << p.str() << '\n';
    }
  }

  void save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    save_csv(out);
  }

  static WinProbTable load_csv(std::istream& in, uint64_t min_samples = 1) {
    WinProbTable t;
    t.min_samples_ = min_samples;
    std::string line;
    if (!std::getline(in, line)) throw EmptyInput("empty win probability CSV");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string center, wins, total, prob;
      if (!std::getline(row, center, ',') || !std::getline(row, wins, ',') ||
          !std::getline(row, total, ','))
        throw std::runtime_error("bad win probability CSV row: " + line);
      Bucket b;
      b.wins = std::stod(wins);
      b.total = std::stoull(total);
      t.buckets_[std::stoi(center)] = b;
    }
    return t;
  }

  static WinProbTable load_csv_file(const std::string& path, uint64_t min_samples = 1) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return load_csv(in, min_samples);
  }

 private:
  std::map<int, Bucket> buckets_;
  uint64_t min_samples_ = 1;
};

template <typename Iter>
WinProbTable build_table(Iter begin, Iter end, uint64_t min_samples = 1) {
  WinProbTable t;
  t.set_min_samples(min_samples);
  for (auto it = begin; it != end; ++it) t.add(*it);
  if (t.empty()) throw EmptyInput("no eval observations");
  return t;
}

struct BlunderThreshold {
  double tau = 0.10;
};

// True when the mover's win probability drops by tau or more across the
// move. Both evals are white-perspective; eval_after describes the position
// after the mover's move.
inline bool label_blunder(int eval_before_cp, int eval_after_cp, chess::Color mover,
                          const WinProbTable& t, BlunderThreshold thr = {}) {
  const double before = t.win_prob_for_mover(eval_before_cp, mover);
  const double after = t.win_prob_for_mover(eval_after_cp, mover);
  return before - after >= thr.tau;
}

}  // namespace hc::winprob
