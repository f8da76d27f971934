#include "bcsnn/neuron.hpp"

#include <stdexcept>

namespace bcsnn {

void LifParams::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("LifParams: beta must be in (0, 1]");
  }
  if (!(theta > 0.0)) {
    throw std::invalid_argument("LifParams: theta must be positive");
  }
  if (!(slope_k >= 0.0)) {
    throw std::invalid_argument("LifParams: slope_k must be nonnegative");
  }
}

double beta_from_tau(double tau, double dt) {
  if (!(tau > 0.0)) throw std::invalid_argument("beta_from_tau: tau must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("beta_from_tau: dt must be positive");
  return std::exp(-dt / tau);
}

std::pair<LifState, Tensor> lif_step(const LifState& state,
                                     const Tensor& input_current,
                                     const LifParams& params) {
  if (!state.u_mem.same_shape(input_current)) {
    throw std::invalid_argument(
        "lif_step: state shape " + shape_to_string(state.u_mem.shape()) +
        " does not match input shape " + shape_to_string(input_current.shape()));
  }
  LifState next;
  next.u_mem = Tensor(state.u_mem.shape());
  Tensor spikes(state.u_mem.shape());
  const std::int64_t n = state.u_mem.size();
  for (std::int64_t i = 0; i < n; ++i) {
    const auto r = lif_scalar_step(state.u_mem[i], input_current[i], params);
    spikes[i] = r.spike;
    next.u_mem[i] = r.u_next;
  }
  return {std::move(next), std::move(spikes)};
}

}  // namespace bcsnn
