#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "humanchess/eval/predictor.hpp"
#include "humanchess/pgn/filter.hpp"

namespace hc::eval {

struct EmptyTestSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OneClassOnly : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingEvals : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TestSet {
  pgn::RatingBin bin;
  std::vector<pgn::MoveInstance> instances;
};

// Bins instances by the mover's rating; games were same-bin filtered so the
// mover's bin is the game's bin.
inline std::vector<TestSet> split_by_bin(std::vector<pgn::MoveInstance> instances) {
  std::map<int, TestSet> by_bin;
  for (auto& inst : instances) {
    const pgn::RatingBin bin = pgn::bin_of(inst.mover_rating);
    auto& ts = by_bin[bin.lower];
    ts.bin = bin;
    ts.instances.push_back(std::move(inst));
  }
  std::vector<TestSet> out;
  for (auto& [lower, ts] : by_bin) out.push_back(std::move(ts));
  return out;
}

struct MatchResult {
  uint64_t n = 0;
  uint64_t matches = 0;
  double accuracy() const { return n ? static_cast<double>(matches) / n : 0.0; }
};

inline MatchResult move_match(Predictor& pred, const TestSet& ts) {
  if (ts.instances.empty()) throw EmptyTestSet("empty test set");
  MatchResult r;
  for (const auto& inst : ts.instances) {
    ++r.n;
    if (pred.predict(inst.history) == inst.played) ++r.matches;
  }
  return r;
}

struct CurveRow {
  std::string predictor;
  int bin = 0;
  uint64_t n = 0;
  uint64_t matches = 0;
  double accuracy = 0;
};

inline std::vector<CurveRow> prediction_curve(Predictor& pred, const std::vector<TestSet>& sets) {
  std::vector<CurveRow> rows;
  for (const auto& ts : sets) {
    const MatchResult r = move_match(pred, ts);
    rows.push_back({pred.name(), ts.bin.lower, r.n, r.matches, r.accuracy()});
  }
  return rows;
}

inline void write_curve_csv(const std::vector<CurveRow>& rows, std::ostream& out) {
  out << "predictor,bin,n,matches,accuracy\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%d,%llu,%llu,%.9g\n", r.bin,
                  static_cast<unsigned long long>(r.n), static_cast<unsigned long long>(r.matches),
                  r.accuracy);
    out << r.predictor << buf;
  }
}

// Per-move agreement rate; symmetric by construction (both predictors see
// the identical instances).
inline double agreement(Predictor& a, Predictor& b, const TestSet& ts) {
  if (ts.instances.empty()) throw EmptyTestSet("empty test set");
  uint64_t same = 0;
  for (const auto& inst : ts.instances)
    if (a.predict(inst.history) == b.predict(inst.history)) ++same;
  return static_cast<double>(same) / ts.instances.size();
}

struct AgreementMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rates;
};

inline AgreementMatrix agreement_matrix(std::vector<Predictor*> preds, const TestSet& ts) {
  if (ts.instances.empty()) throw EmptyTestSet("empty test set");
  const size_t k = preds.size();
  // one prediction pass per predictor, reused across all pairs
  std::vector<std::vector<chess::Move>> moves(k);
  for (size_t i = 0; i < k; ++i)
    for (const auto& inst : ts.instances) moves[i].push_back(preds[i]->predict(inst.history));

  AgreementMatrix m;
  m.rates.assign(k, std::vector<double>(k, 0.0));
  for (size_t i = 0; i < k; ++i) m.names.push_back(preds[i]->name());
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = i; j < k; ++j) {
      uint64_t same = 0;
      for (size_t t = 0; t < ts.instances.size(); ++t)
        if (moves[i][t] == moves[j][t]) ++same;
      const double rate = static_cast<double>(same) / ts.instances.size();
      m.rates[i][j] = m.rates[j][i] = rate;
    }
  }
  return m;
}

inline void write_agreement_csv(const AgreementMatrix& m, std::ostream& out) {
  out << "predictor";
  for (const auto& n : m.names) out << ',' << n;
  out << '\n';
  char buf[32];
  for (size_t i = 0; i < m.names.size(); ++i) {
    out << m.names[i];
    for (double r : m.rates[i]) {
      std::snprintf(buf, sizeof buf, ",%.9g", r);
      out << buf;
    }
    out << '\n';
  }
}

struct MaximaRow {
  std::string predictor;
  int best_bin = 0;
  double accuracy = 0;
};

// Per predictor, the bin of maximum accuracy; ties break toward the lowest
// bin.
inline std::vector<MaximaRow> model_maxima(const std::vector<CurveRow>& curve) {
  std::map<std::string, MaximaRow> best;
  std::vector<std::string> order;
  for (const auto& r : curve) {
    auto it = best.find(r.predictor);
    if (it == best.end()) {
      best[r.predictor] = {r.predictor, r.bin, r.accuracy};
      order.push_back(r.predictor);
    } else if (r.accuracy > it->second.accuracy ||
               (r.accuracy == it->second.accuracy && r.bin < it->second.best_bin)) {
      it->second = {r.predictor, r.bin, r.accuracy};
    }
  }
  std::vector<MaximaRow> out;
  for (const auto& name : order) out.push_back(best.at(name));
  return out;
}

inline void write_maxima_csv(const std::vector<MaximaRow>& rows, std::ostream& out) {
  out << "predictor,best_bin,accuracy\n";
  char buf[48];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%d,%.9g\n", r.best_bin, r.accuracy);
    out << r.predictor << buf;
  }
}

// --- decision-type / decision-quality decomposition -------------------------

// Mover-perspective win probabilities of the best, second best, and played
// moves, per instance, from an external MultiPV evaluation.
struct RefEvals {
  double best = 0;
  double second = 0;
  double played = 0;
};

enum class DecomposeMode { Complexity, Quality };

struct DecompositionRow {
  double bucket_low = 0;
  double bucket_high = 0;
  uint64_t n = 0;
  uint64_t matches = 0;
  double accuracy = 0;
};

inline std::vector<DecompositionRow> decompose(Predictor& pred, const TestSet& ts,
                                               const std::vector<RefEvals>& ref_evals,
                                               DecomposeMode mode, double bin_width = 0.05) {
  if (ts.instances.empty()) throw EmptyTestSet("empty test set");
  if (ref_evals.size() != ts.instances.size())
    throw MissingEvals("need reference evals for every instance");
  const int buckets = static_cast<int>(std::ceil(1.0 / bin_width));
  std::vector<DecompositionRow> rows(buckets);
  for (int b = 0; b < buckets; ++b) {
    rows[b].bucket_low = b * bin_width;
    rows[b].bucket_high = std::min(1.0, (b + 1) * bin_width);
  }
  for (size_t i = 0; i < ts.instances.size(); ++i) {
    const auto& re = ref_evals[i];
    const double gap = mode == DecomposeMode::Complexity
                           ? std::max(0.0, re.best - re.second)
                           : std::max(0.0, re.best - re.played);
    const int b = std::min(buckets - 1, static_cast<int>(gap / bin_width));
    rows[b].n += 1;
    if (pred.predict(ts.instances[i].history) == ts.instances[i].played) rows[b].matches += 1;
  }
  for (auto& r : rows) r.accuracy = r.n ? static_cast<double>(r.matches) / r.n : 0.0;
  return rows;
}

inline void write_decomposition_csv(const std::vector<DecompositionRow>& rows, std::ostream& out) {
  out << "bucket_low,bucket_high,n,matches,accuracy\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%llu,%llu,%.9g\n", r.bucket_low, r.bucket_high,
                  static_cast<unsigned long long>(r.n), static_cast<unsigned long long>(r.matches),
                  r.accuracy);
    out << buf;
  }
}

// --- classifier metrics ------------------------------------------------------

// Rank-based AUC with midrank tie handling.
inline double auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores/labels size mismatch");
  uint64_t pos = 0, neg = 0;
  for (uint8_t l : labels) (l ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw OneClassOnly("need both classes for AUC");

  std::vector<size_t> idx(scores.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double midrank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k)
      if (labels[idx[k]]) pos_rank_sum += midrank;
    i = j + 1;
  }
  const double u = pos_rank_sum - static_cast<double>(pos) * (pos + 1) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

inline double accuracy_at(double threshold, const std::vector<double>& scores,
                          const std::vector<uint8_t>& labels) {
  if (scores.empty() || scores.size() != labels.size())
    throw std::invalid_argument("scores/labels size mismatch");
  uint64_t hits = 0;
  for (size_t i = 0; i < scores.size(); ++i)
    if ((scores[i] >= threshold) == (labels[i] != 0)) ++hits;
  return static_cast<double>(hits) / scores.size();
}

}  // namespace hc::eval
