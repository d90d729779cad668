#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dparse/autodiff.hpp"

namespace dparse {

struct AdamHyper {
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double epsilon = 1e-12;
  double anneal_base = 0.75;
  double anneal_denom = 5000.0;

  /// lr(t) = lr0 * anneal_base^(t / anneal_denom)
  double rate_at(std::int64_t t) const;
};

/// Per-parameter moment accumulators; step counter is shared by the run.
class AdamState {
 public:
  void attach(std::vector<ParamTensor>& params);
  std::int64_t step_count() const { return t_; }

  /// One bias-corrected Adam step over all attached parameters using
  /// their current grad accumulators. Throws TrainingError on a
  /// non-finite gradient.
  void update(std::vector<ParamTensor>& params, const AdamHyper& hyper);

 private:
  std::vector<Tensor> m_, v_;
  std::int64_t t_ = 0;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dparse
