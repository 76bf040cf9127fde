#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "humanchess/util/rng.hpp"

namespace hc::data {

struct DownsampleStats {
  size_t positives = 0;
  size_t negatives_kept = 0;
  size_t negatives_seen = 0;
  bool insufficient_negatives = false;
};

// Keeps every positive and a seeded uniform sample of floor(ratio * |pos|)
// negatives, in their original order. When there are too few negatives they
// are all kept and the stats flag it.
template <typename T>
std::vector<T> downsample_negatives(const std::vector<T>& positives, const std::vector<T>& negatives,
                                    double ratio, uint64_t seed, DownsampleStats* stats = nullptr) {
  DownsampleStats local;
  DownsampleStats& st = stats ? *stats : local;
  st.positives = positives.size();
  st.negatives_seen = negatives.size();

  size_t want = static_cast<size_t>(ratio * static_cast<double>(positives.size()));
  if (want > negatives.size()) {
    want = negatives.size();
    st.insufficient_negatives = true;
  }
  st.negatives_kept = want;

  std::vector<uint64_t> idx(negatives.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  // partial Fisher-Yates: the first `want` entries are a uniform sample
  for (size_t i = 0; i < want; ++i) {
    const size_t j = i + static_cast<size_t>(rng.next_below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(want);
  std::sort(idx.begin(), idx.end());

  std::vector<T> out;
  out.reserve(positives.size() + want);
  for (const T& p : positives) out.push_back(p);
  for (uint64_t i : idx) out.push_back(negatives[i]);
  return out;
}

}  // namespace hc::data
