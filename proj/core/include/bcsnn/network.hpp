#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bcsnn/coding.hpp"
#include "bcsnn/layers.hpp"
#include "bcsnn/tensor.hpp"

namespace bcsnn {

// Record of one completed time-stepped forward pass. The per-layer caches
// backing the backward sweep live inside the layers; the tape carries the pass
// metadata, the recorded outputs, and an id tying it to the pass that produced
// it (running another pass invalidates the tape for backward use). Replaying
// the same input with the same pass_seed and settings reproduces output_spikes
// and output_membranes bit-exactly.
struct TimeTape {
  int num_steps = 0;
  int batch = 0;
  RunMode mode = RunMode::kEval;
  bool relaxed = false;
  bool recorded = false;  // per-layer caches were kept for backward
  bool complete = false;
  std::uint64_t pass_seed = 0;
  std::uint64_t pass_id = 0;
  Tensor output_spikes;     // [num_steps, batch, classes]
  Tensor output_membranes;  // [num_steps, batch, classes], post-update potentials
};

struct ForwardOptions {
  int num_steps = 25;
  RunMode mode = RunMode::kEval;
  // seeds the per-pass dropout masks; ignored in eval mode
  std::uint64_t pass_seed = 0;
  // fast-sigmoid forward for finite-difference gradient validation
  bool relaxed = false;
};

// Ordered stack of layers stepped jointly through simulated time. The input
// image is presented as a constant current at every step; the last layer must
// be a LifLayer, whose spikes and membrane potentials are recorded per step.
class Network {
 public:
  Network() = default;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  // per-sample input shape, e.g. {3, 128, 128}; must precede any add()
  void set_input_shape(std::vector<int> shape);
  const std::vector<int>& input_shape() const { return input_shape_; }

  // appends a layer, assigns its 1-based index, and infers its output shape;
  // throws std::invalid_argument when the shapes do not chain
  Layer& add(std::unique_ptr<Layer> layer);

  int num_layers() const { return static_cast<int>(layers_.size()); }
  Layer& layer(int i) { return *layers_[static_cast<size_t>(i)]; }
  const Layer& layer(int i) const { return *layers_[static_cast<size_t>(i)]; }

  // per-sample output shape of layer i / of the whole network
  const std::vector<int>& output_shape(int i) const {
    return output_shapes_[static_cast<size_t>(i)];
  }
  const std::vector<int>& output_shape() const { return output_shapes_.back(); }
  int num_classes() const;

  // parameters and persistent buffers with "<layer-name>.<field>" names
  std::vector<ParamRef> all_params();
  std::vector<BufferRef> all_buffers();
  std::int64_t num_params();
  void zero_grad();

  // seeded uniform(+-1/sqrt(fan_in)) initialization, layer by layer
  void init_params(std::uint64_t seed);

  // runs num_steps time steps in the requested mode and returns the tape;
  // throws std::invalid_argument on input shape mismatch
  TimeTape forward(const Tensor& batch_input, const ForwardOptions& opts);

  std::uint64_t last_pass_id() const { return pass_counter_; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<int> input_shape_;
  std::vector<std::vector<int>> output_shapes_;
  std::uint64_t pass_counter_ = 0;
};

// Samples one mask per dropout layer (in network order) from a single seeded
// stream, installs them, and returns them. Mask entries are 0 or 1/(1 - rate);
// a rate-0 layer gets an all-ones mask.
std::vector<Tensor> sample_dropout_masks(Network& network, std::uint64_t seed);

// Backpropagation through time. Sweeps the tape from the last step to the
// first, injecting output_spike_grads [num_steps, batch, classes] at the
// output and accumulating parameter gradients over all steps. The surrogate
// derivative stands in for the spike nonlinearity, and both the decay and
// reset pathways of the membrane recurrence are differentiated.
// Throws std::logic_error when the tape is incomplete, was not recorded in
// train mode, or a newer pass has since run through the network.
void bptt_backward(Network& network, const TimeTape& tape,
                   const Tensor& output_spike_grads);

// Convenience overload: converts per-sample logit gradients into per-step
// spike gradients under the given coding before sweeping.
void bptt_backward(Network& network, const TimeTape& tape, CodingMode mode,
                   const std::vector<std::vector<double>>& logit_grads);

// Extracts one sample's output spikes from a tape as a SpikeRecord.
SpikeRecord spike_record_for_sample(const TimeTape& tape, int sample);

}  // namespace bcsnn
