#pragma once

#include <cstdint>
#include <vector>

namespace hc::nn {

// Piecewise-constant learning rate: optional burn-in, then the initial rate
// scaled by `factor` at each drop step.
struct LrSchedule {
  double initial = 0.1;
  double factor = 0.1;
  std::vector<uint64_t> drop_steps{80000, 200000, 360000};
  double burn_in_rate = 0.0;  // used for the first burn_in_steps when > 0
  uint64_t burn_in_steps = 0;

  double rate_at(uint64_t step) const {
    if (burn_in_steps > 0 && step < burn_in_steps) return burn_in_rate;
    double rate = initial;
    for (uint64_t drop : drop_steps)
      if (step >= drop) rate *= factor;
    return rate;
  }
};

inline double schedule_rate(const LrSchedule& s, uint64_t step) { return s.rate_at(step); }

}  // namespace hc::nn
