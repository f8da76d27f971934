#include "bcsnn/coding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bcsnn {

std::string coding_mode_name(CodingMode m) {
  switch (m) {
    case CodingMode::kRate: return "rate";
    case CodingMode::kTemporalNegative: return "temporal-negative";
    case CodingMode::kTemporalInverse: return "temporal-inverse";
  }
  return "unknown";
}

CodingMode coding_mode_from_name(const std::string& name) {
  if (name == "rate") return CodingMode::kRate;
  if (name == "temporal-negative") return CodingMode::kTemporalNegative;
  if (name == "temporal-inverse") return CodingMode::kTemporalInverse;
  throw std::invalid_argument("unknown coding mode: " + name);
}

EncodedInput encode_constant_current(const Tensor& image, int num_steps) {
  if (num_steps < 1) {
    throw std::invalid_argument("encode_constant_current: num_steps must be >= 1");
  }
  for (std::int64_t i = 0; i < image.size(); ++i) {
    if (!(image[i] >= 0.0 && image[i] <= 1.0)) {
      throw std::invalid_argument(
          "encode_constant_current: pixel values must lie in [0, 1]");
    }
  }
  return EncodedInput{image, num_steps};
}

RateDecode rate_decode(const SpikeRecord& record) {
  const int steps = record.num_steps();
  const int neurons = record.num_neurons();
  RateDecode out;
  out.counts.assign(static_cast<size_t>(neurons), 0.0);
  for (int t = 1; t <= steps; ++t) {
    for (int i = 0; i < neurons; ++i) out.counts[static_cast<size_t>(i)] += record.at(t, i);
  }
  out.predicted = 0;
  for (int i = 1; i < neurons; ++i) {
    if (out.counts[static_cast<size_t>(i)] > out.counts[static_cast<size_t>(out.predicted)]) {
      out.predicted = i;
    }
  }
  return out;
}

TemporalDecode first_spike_decode(const SpikeRecord& record) {
  const int steps = record.num_steps();
  const int neurons = record.num_neurons();
  TemporalDecode out;
  out.ft.num_steps = steps;
  out.ft.ft.assign(static_cast<size_t>(neurons), FirstSpikeTimes::kNeverSpiked);
  for (int i = 0; i < neurons; ++i) {
    for (int t = 1; t <= steps; ++t) {
      if (record.at(t, i) != 0.0) {
        out.ft.ft[static_cast<size_t>(i)] = t;
        break;
      }
    }
  }
  // argmin over first-spike times with never-spiked treated as +infinity
  out.predicted = 0;
  int best = out.ft.spiked(0) ? out.ft.ft[0] : steps + 1;
  for (int i = 1; i < neurons; ++i) {
    const int ti = out.ft.spiked(i) ? out.ft.ft[static_cast<size_t>(i)] : steps + 1;
    if (ti < best) {
      best = ti;
      out.predicted = i;
    }
  }
  return out;
}

std::vector<double> temporal_logits(const FirstSpikeTimes& ft, CodingMode strategy) {
  if (strategy == CodingMode::kRate) {
    throw std::invalid_argument("temporal_logits: rate mode has no temporal logits");
  }
  std::vector<double> logits(ft.ft.size());
  for (size_t i = 0; i < ft.ft.size(); ++i) {
    if (ft.ft[i] == FirstSpikeTimes::kNeverSpiked) {
      logits[i] = strategy == CodingMode::kTemporalNegative
                      ? -static_cast<double>(ft.num_steps + 1)
                      : 0.0;
    } else {
      logits[i] = strategy == CodingMode::kTemporalNegative
                      ? -static_cast<double>(ft.ft[i])
                      : 1.0 / static_cast<double>(ft.ft[i]);
    }
  }
  return logits;
}

std::vector<double> logits_for(const SpikeRecord& record, CodingMode mode) {
  if (mode == CodingMode::kRate) return rate_decode(record).counts;
  return temporal_logits(first_spike_decode(record).ft, mode);
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

SoftmaxLoss softmax_cross_entropy(const std::vector<double>& logits, int label) {
  if (logits.empty()) throw std::invalid_argument("softmax_cross_entropy: empty logits");
  if (label < 0 || static_cast<size_t>(label) >= logits.size()) {
    throw std::invalid_argument("softmax_cross_entropy: label out of range");
  }
  SoftmaxLoss out;
  out.probabilities = softmax(logits);
  out.loss = -std::log(out.probabilities[static_cast<size_t>(label)]);
  out.loss_grad = out.probabilities;
  out.loss_grad[static_cast<size_t>(label)] -= 1.0;
  return out;
}

Tensor spike_grads_from_logit_grads(const Tensor& output_spikes, CodingMode mode,
                                    const std::vector<std::vector<double>>& logit_grads) {
  if (output_spikes.rank() != 3) {
    throw std::invalid_argument("spike_grads_from_logit_grads: expected [steps, batch, classes]");
  }
  const int steps = output_spikes.dim(0);
  const int batch = output_spikes.dim(1);
  const int classes = output_spikes.dim(2);
  if (static_cast<int>(logit_grads.size()) != batch) {
    throw std::invalid_argument("spike_grads_from_logit_grads: batch mismatch");
  }
  for (const auto& row : logit_grads) {
    if (static_cast<int>(row.size()) != classes) {
      throw std::invalid_argument("spike_grads_from_logit_grads: class count mismatch");
    }
  }
  Tensor grads({steps, batch, classes});
  auto idx = [batch, classes](int t, int n, int c) {
    return (static_cast<std::int64_t>(t) * batch + n) * classes + c;
  };
  if (mode == CodingMode::kRate) {
    // counts are a plain sum over steps, so the count gradient repeats per step
    for (int t = 0; t < steps; ++t)
      for (int n = 0; n < batch; ++n)
        for (int c = 0; c < classes; ++c)
          grads[idx(t, n, c)] = logit_grads[static_cast<size_t>(n)][static_cast<size_t>(c)];
    return grads;
  }
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < classes; ++c) {
      // recover this neuron's first-spike step
      int first = FirstSpikeTimes::kNeverSpiked;
      for (int t = 0; t < steps; ++t) {
        if (output_spikes[idx(t, n, c)] != 0.0) {
          first = t + 1;
          break;
        }
      }
      const double ft = first == FirstSpikeTimes::kNeverSpiked
                            ? static_cast<double>(steps + 1)
                            : static_cast<double>(first);
      const double dlogit_dft = mode == CodingMode::kTemporalNegative ? -1.0 : -1.0 / (ft * ft);
      // a stronger spike means an earlier first spike: d(ft)/d(spike) = -1,
      // applied at the recorded first-spike step (last step when silent)
      const double dloss_dft = logit_grads[static_cast<size_t>(n)][static_cast<size_t>(c)] * dlogit_dft;
      const int inject = first == FirstSpikeTimes::kNeverSpiked ? steps - 1 : first - 1;
      grads[idx(inject, n, c)] = -dloss_dft;
    }
  }
  return grads;
}

}  // namespace bcsnn
