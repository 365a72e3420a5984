#include "strata/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace strata {

AdagradState::AdagradState(double lr, double acc0) : learning_rate(lr), initial_accumulator(acc0) {
  if (!(lr > 0.0)) throw std::invalid_argument("adagrad: learning_rate must be positive");
  if (!(acc0 > 0.0)) throw std::invalid_argument("adagrad: initial_accumulator must be positive");
}

void AdagradState::init(const ParameterStore& params) {
  accumulator.clear();
  for (std::size_t i = 0; i < params.size(); ++i)
    accumulator.emplace_back(params.at(i).size(), initial_accumulator);
}

void adagrad_step(std::span<double> param, std::span<const double> grad, std::span<double> accumulator,
                  double learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("adagrad: learning_rate must be positive");
  if (param.size() != grad.size() || param.size() != accumulator.size())
    throw std::invalid_argument("adagrad: parameter, gradient and accumulator sizes differ");
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    accumulator[i] += g * g;
    param[i] -= learning_rate * g / std::sqrt(accumulator[i]);
  }
}

void adagrad_step(ParameterStore& params, AdagradState& state) {
  if (state.accumulator.size() != params.size())
    throw std::invalid_argument("adagrad: state was initialized for a different parameter set");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = params.at(i);
    adagrad_step(t.data(), t.grad(), state.accumulator[i], state.learning_rate);
  }
}

double global_grad_norm(const ParameterStore& params) {
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (double g : params.at(i).grad()) sq += g * g;
  return std::sqrt(sq);
}

double clip_grad_norm(ParameterStore& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (std::size_t i = 0; i < params.size(); ++i)
      for (double& g : params.at(i).grad()) g *= s;
  }
  return norm;
}

}  // namespace strata
