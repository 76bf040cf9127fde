#pragma once

#include <memory>
#include <string>

#include "humanchess/chess/history.hpp"

namespace hc::eval {

// Anything that maps a position (with context) to a move. Implementations
// must always return a move that is legal in history.current().
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual chess::Move predict(const chess::PositionHistory& history) = 0;
  virtual std::string name() const = 0;
};

using PredictorPtr = std::unique_ptr<Predictor>;

}  // namespace hc::eval
