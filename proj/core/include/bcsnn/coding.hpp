#pragma once

#include <string>
#include <vector>

#include "bcsnn/tensor.hpp"

namespace bcsnn {

/// Output decoding scheme. Rate coding counts spikes per output neuron;
/// the temporal schemes rank neurons by time to first spike, mapped to
/// logits by negation or reciprocal.
enum class CodingMode { kRate, kTemporalNegative, kTemporalInverse };

std::string coding_mode_name(CodingMode m);
CodingMode coding_mode_from_name(const std::string& name);

/// Spike train of one sample's output layer: rows are time steps 1..num_steps
/// (row t-1 holds step t), columns are output neurons, entries in {0, 1}.
struct SpikeRecord {
  Tensor spikes;  // [num_steps, num_neurons]

  int num_steps() const { return spikes.rank() == 2 ? spikes.dim(0) : 0; }
  int num_neurons() const { return spikes.rank() == 2 ? spikes.dim(1) : 0; }
  double at(int step, int neuron) const {  // step is 1-based
    return spikes[static_cast<std::int64_t>(step - 1) * num_neurons() + neuron];
  }
};

/// First spike time per output neuron, in 1-based step units.
/// kNeverSpiked marks neurons that stayed silent over the whole horizon.
struct FirstSpikeTimes {
  static constexpr int kNeverSpiked = 0;
  std::vector<int> ft;
  int num_steps = 0;

  bool spiked(int i) const { return ft[static_cast<size_t>(i)] != kNeverSpiked; }
};

/// Static image presented as identical input current at every time step.
struct EncodedInput {
  Tensor image;
  int num_steps = 0;

  const Tensor& at_step(int /*t*/) const { return image; }
};

/// Constant-current encoding: the normalized image is the input current at
/// every step. Pixels must lie in [0, 1]; throws std::invalid_argument
/// otherwise.
EncodedInput encode_constant_current(const Tensor& image, int num_steps);

struct RateDecode {
  std::vector<double> counts;  ///< spike count per neuron over all steps
  int predicted = 0;           ///< argmax of counts, ties to lowest index
};
RateDecode rate_decode(const SpikeRecord& record);

struct TemporalDecode {
  FirstSpikeTimes ft;
  int predicted = 0;  ///< earliest-spiking neuron, ties to lowest index
};
TemporalDecode first_spike_decode(const SpikeRecord& record);

/// Maps first-spike times to logits. Negative strategy: -ft. Inverse
/// strategy: 1/ft. Never-spiked neurons map to -(num_steps+1) and 0
/// respectively, keeping "later is worse" ordering in both cases.
std::vector<double> temporal_logits(const FirstSpikeTimes& ft, CodingMode strategy);

/// Logits of a record under the given coding: spike counts for rate mode,
/// mapped first-spike times otherwise.
std::vector<double> logits_for(const SpikeRecord& record, CodingMode mode);

std::vector<double> softmax(const std::vector<double>& logits);

struct SoftmaxLoss {
  std::vector<double> probabilities;
  double loss = 0.0;
  std::vector<double> loss_grad;  ///< probabilities minus one-hot(label)
};

/// Softmax + cross-entropy against an integer label.
/// Throws std::invalid_argument for a label outside [0, logits.size()).
SoftmaxLoss softmax_cross_entropy(const std::vector<double>& logits, int label);

/// Distributes per-sample logit gradients onto the per-step output spike
/// tensor [num_steps, batch, classes]. Rate mode broadcasts the count
/// gradient to every step; temporal modes differentiate the logit map in
/// the first-spike time and inject at each neuron's recorded first-spike
/// step (last step for neurons that never spiked).
Tensor spike_grads_from_logit_grads(const Tensor& output_spikes,
                                    CodingMode mode,
                                    const std::vector<std::vector<double>>& logit_grads);

}  // namespace bcsnn
