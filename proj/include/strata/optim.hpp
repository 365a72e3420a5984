#pragma once

#include <span>
#include <vector>

#include "strata/graph.hpp"

namespace strata {

/// Per-parameter Adagrad accumulators.
///
///   acc   += grad^2
///   param -= lr * grad / sqrt(acc)
///
/// There is no epsilon in the denominator: every accumulator starts at
/// `initial_accumulator` > 0.
struct AdagradState {
  double learning_rate = 0.15;
  double initial_accumulator = 0.1;
  std::vector<std::vector<double>> accumulator;  // one per ParameterStore entry

  AdagradState() = default;
  AdagradState(double lr, double acc0);

  /// Sizes the accumulators for `params` (all entries = initial_accumulator).
  void init(const ParameterStore& params);
};

/// Single-tensor update. Throws std::invalid_argument on shape mismatch or a
/// nonpositive learning rate.
void adagrad_step(std::span<double> param, std::span<const double> grad, std::span<double> accumulator,
                  double learning_rate);

/// Applies adagrad_step to every parameter using its current grad.
void adagrad_step(ParameterStore& params, AdagradState& state);

/// Global L2 norm over all parameter grads.
double global_grad_norm(const ParameterStore& params);

/// Rescales all grads so the global norm is at most max_norm. Returns the
/// norm before clipping.
double clip_grad_norm(ParameterStore& params, double max_norm);

}  // namespace strata
