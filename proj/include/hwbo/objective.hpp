#pragma once

#include <memory>
#include <optional>

#include "hwbo/search_space.hpp"

namespace hwbo {

struct HwMetrics {
  double power = 0.0;
  double memory = 0.0;
};

/// One training run, advanced an epoch at a time.
class TrainingSession {
 public:
  virtual ~TrainingSession() = default;

  virtual int total_epochs() const = 0;
  /// Trains one more epoch and returns validation accuracy in [0, 1]. A NaN
  /// return signals divergence.
  virtual double train_epoch() = 0;
  /// Test error after the last trained epoch.
  virtual double test_error() const = 0;
};

/// The expensive black box: trains a network for a design point.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::unique_ptr<TrainingSession> start(const DesignPoint& x) const = 0;
  /// Cost of one training epoch in the solver's time units.
  virtual double epoch_cost(const DesignPoint& x) const = 0;
  virtual int num_classes() const = 0;
  /// Ground-truth hardware metrics when the backend can measure them.
  virtual std::optional<HwMetrics> measure(const StructuralVector& z) const = 0;
};

}  // namespace hwbo
