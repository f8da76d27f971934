#pragma once

#include <cmath>
#include <utility>

#include "bcsnn/tensor.hpp"

namespace bcsnn {

/// Leaky integrate-and-fire neuron parameters.
///
/// The discrete membrane recurrence is
///     u[t+1] = beta * u[t] + I[t] - s[t] * theta
/// with the spike decision s[t] = 1 iff u[t] > theta taken on the membrane
/// BEFORE the update, and reset-by-subtraction folded into the same update.
/// Input current arrives pre-weighted; the (1 - beta) input scaling of the
/// underlying RC discretization is absorbed into the learnable weights.
struct LifParams {
  double beta = 0.9;      ///< membrane decay factor per step, in (0, 1]
  double theta = 1.0;     ///< spike threshold, > 0
  double slope_k = 25.0;  ///< slope of the fast-sigmoid surrogate, >= 0

  /// Throws std::invalid_argument when any field is out of range.
  void validate() const;
};

/// Per-neuron membrane potential carried across time steps.
struct LifState {
  Tensor u_mem;
};

/// Membrane decay factor from the RC time constant: e^(-dt/tau).
/// Exact for any step size, unlike the first-order 1 - dt/tau.
/// Throws std::invalid_argument for non-positive tau or dt.
double beta_from_tau(double tau, double dt);

struct LifScalarStep {
  double spike;   ///< exactly 0.0 or 1.0
  double u_next;  ///< membrane after decay, integration and reset
};

/// One LIF update for a single neuron. Shared by the vectorized step and the
/// layer engine so the recurrence exists in exactly one place.
inline LifScalarStep lif_scalar_step(double u, double input_current,
                                     const LifParams& p) {
  const double spike = u > p.theta ? 1.0 : 0.0;
  return {spike, p.beta * u + input_current - spike * p.theta};
}

/// Vectorized LIF update over a state tensor of any shape.
/// Returns the new state and the binary spike tensor (same shape).
/// Throws std::invalid_argument when state and input shapes differ.
std::pair<LifState, Tensor> lif_step(const LifState& state,
                                     const Tensor& input_current,
                                     const LifParams& params);

/// Fast-sigmoid surrogate activation: (u - theta) / (1 + k|u - theta|).
/// Stands in for the Heaviside spike rule when a continuous relaxation of
/// the forward pass is needed.
inline double fast_sigmoid(double u, const LifParams& p) {
  const double c = u - p.theta;
  return c / (1.0 + p.slope_k * std::abs(c));
}

/// Derivative of the fast sigmoid: 1 / (1 + k|u - theta|)^2, in (0, 1].
/// Used in the backward pass in place of the Heaviside derivative.
inline double surrogate_grad(double u, const LifParams& p) {
  const double d = 1.0 + p.slope_k * std::abs(u - p.theta);
  return 1.0 / (d * d);
}

}  // namespace bcsnn
