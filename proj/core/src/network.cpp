#include "bcsnn/network.hpp"

#include <cstring>
#include <stdexcept>

#include "bcsnn/rng.hpp"

namespace bcsnn {

void Network::set_input_shape(std::vector<int> shape) {
  if (!layers_.empty()) {
    throw std::logic_error("Network: input shape must be set before adding layers");
  }
  if (shape_numel(shape) < 1) {
    throw std::invalid_argument("Network: input shape " + shape_to_string(shape) +
                                " has no elements");
  }
  input_shape_ = std::move(shape);
}

Layer& Network::add(std::unique_ptr<Layer> layer) {
  if (input_shape_.empty()) {
    throw std::logic_error("Network: set_input_shape must be called before add");
  }
  const std::vector<int>& in =
      layers_.empty() ? input_shape_ : output_shapes_.back();
  layer->set_index(static_cast<int>(layers_.size()) + 1);
  output_shapes_.push_back(layer->infer_output_shape(in));
  layers_.push_back(std::move(layer));
  return *layers_.back();
}

int Network::num_classes() const {
  const auto& out = output_shape();
  if (out.size() != 1) {
    throw std::logic_error("Network: output shape " + shape_to_string(out) +
                           " is not a class vector");
  }
  return out[0];
}

std::vector<ParamRef> Network::all_params() {
  std::vector<ParamRef> out;
  for (auto& l : layers_) {
    for (auto& p : l->params()) {
      out.push_back({l->name() + "." + p.name, p.value, p.grad});
    }
  }
  return out;
}

std::vector<BufferRef> Network::all_buffers() {
  std::vector<BufferRef> out;
  for (auto& l : layers_) {
    for (auto& b : l->buffers()) {
      out.push_back({l->name() + "." + b.name, b.value});
    }
  }
  return out;
}

std::int64_t Network::num_params() {
  std::int64_t n = 0;
  for (auto& l : layers_) n += l->num_params();
  return n;
}

void Network::zero_grad() {
  for (auto& l : layers_) l->zero_grad();
}

void Network::init_params(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : layers_) l->init_params(rng);
}

TimeTape Network::forward(const Tensor& batch_input, const ForwardOptions& opts) {
  if (layers_.empty()) throw std::logic_error("Network: no layers to run");
  if (opts.num_steps < 1) {
    throw std::invalid_argument("Network: num_steps must be >= 1");
  }
  const int want_rank = static_cast<int>(input_shape_.size()) + 1;
  bool shape_ok = batch_input.rank() == want_rank && batch_input.dim(0) >= 1;
  for (size_t i = 0; shape_ok && i < input_shape_.size(); ++i) {
    shape_ok = batch_input.dim(static_cast<int>(i) + 1) == input_shape_[i];
  }
  if (!shape_ok) {
    throw std::invalid_argument("Network: expected input [B" +
                                ([this] {
                                  std::string s;
                                  for (int d : input_shape_) s += ", " + std::to_string(d);
                                  return s;
                                }()) +
                                "], got " + shape_to_string(batch_input.shape()));
  }
  auto* out_lif = dynamic_cast<LifLayer*>(layers_.back().get());
  if (out_lif == nullptr) {
    throw std::logic_error("Network: the output layer must be a lif layer");
  }

  const int batch = batch_input.dim(0);
  PassContext ctx;
  ctx.mode = opts.mode;
  ctx.relaxed = opts.relaxed;
  ctx.record_tape = opts.mode == RunMode::kTrain;
  ctx.num_steps = opts.num_steps;
  ctx.batch = batch;

  if (opts.mode != RunMode::kEval) sample_dropout_masks(*this, opts.pass_seed);
  for (auto& l : layers_) l->begin_pass(ctx);

  const int classes = num_classes();
  TimeTape tape;
  tape.num_steps = opts.num_steps;
  tape.batch = batch;
  tape.mode = opts.mode;
  tape.relaxed = opts.relaxed;
  tape.recorded = ctx.record_tape;
  tape.pass_seed = opts.pass_seed;
  tape.output_spikes = Tensor({opts.num_steps, batch, classes});
  tape.output_membranes = Tensor({opts.num_steps, batch, classes});

  const std::int64_t frame = static_cast<std::int64_t>(batch) * classes;
  for (int t = 0; t < opts.num_steps; ++t) {
    ctx.step = t;
    Tensor x = batch_input;  // constant-current presentation
    for (auto& l : layers_) x = l->forward_step(x, ctx);
    std::memcpy(tape.output_spikes.data() + t * frame, x.data(),
                static_cast<size_t>(frame) * sizeof(double));
    std::memcpy(tape.output_membranes.data() + t * frame, out_lif->membrane().data(),
                static_cast<size_t>(frame) * sizeof(double));
  }
  tape.complete = true;
  tape.pass_id = ++pass_counter_;
  return tape;
}

std::vector<Tensor> sample_dropout_masks(Network& network, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> masks;
  for (int i = 0; i < network.num_layers(); ++i) {
    auto* drop = dynamic_cast<Dropout*>(&network.layer(i));
    if (drop == nullptr) continue;
    // the layer's input shape equals its output shape (identity map)
    Tensor mask(network.output_shape(i));
    const double rate = drop->rate();
    const double scale = 1.0 / (1.0 - rate);
    for (std::int64_t j = 0; j < mask.size(); ++j) {
      mask[j] = rng.uniform() >= rate ? scale : 0.0;
    }
    drop->set_mask(mask);
    masks.push_back(std::move(mask));
  }
  return masks;
}

void bptt_backward(Network& network, const TimeTape& tape,
                   const Tensor& output_spike_grads) {
  if (!tape.complete) {
    throw std::logic_error("bptt_backward: tape does not hold a completed forward pass");
  }
  if (!tape.recorded) {
    throw std::logic_error(
        "bptt_backward: forward pass kept no layer caches (run in train mode)");
  }
  if (tape.pass_id != network.last_pass_id()) {
    throw std::logic_error(
        "bptt_backward: the network ran another pass after this tape was recorded");
  }
  if (!output_spike_grads.same_shape(tape.output_spikes)) {
    throw std::invalid_argument("bptt_backward: spike gradient shape " +
                                shape_to_string(output_spike_grads.shape()) +
                                " does not match recorded outputs " +
                                shape_to_string(tape.output_spikes.shape()));
  }
  for (int i = 0; i < network.num_layers(); ++i) network.layer(i).begin_backward();

  const std::int64_t frame =
      static_cast<std::int64_t>(tape.batch) * tape.output_spikes.dim(2);
  for (int t = tape.num_steps - 1; t >= 0; --t) {
    Tensor g({tape.batch, tape.output_spikes.dim(2)});
    std::memcpy(g.data(), output_spike_grads.data() + t * frame,
                static_cast<size_t>(frame) * sizeof(double));
    for (int i = network.num_layers() - 1; i >= 0; --i) {
      g = network.layer(i).backward_step(g, t);
    }
  }
}

void bptt_backward(Network& network, const TimeTape& tape, CodingMode mode,
                   const std::vector<std::vector<double>>& logit_grads) {
  bptt_backward(network, tape,
                spike_grads_from_logit_grads(tape.output_spikes, mode, logit_grads));
}

SpikeRecord spike_record_for_sample(const TimeTape& tape, int sample) {
  if (sample < 0 || sample >= tape.batch) {
    throw std::invalid_argument("spike_record_for_sample: sample index out of range");
  }
  const int classes = tape.output_spikes.dim(2);
  SpikeRecord record;
  record.spikes = Tensor({tape.num_steps, classes});
  for (int t = 0; t < tape.num_steps; ++t) {
    for (int c = 0; c < classes; ++c) {
      record.spikes[static_cast<std::int64_t>(t) * classes + c] =
          tape.output_spikes[(static_cast<std::int64_t>(t) * tape.batch + sample) *
                                 classes +
                             c];
    }
  }
  return record;
}

}  // namespace bcsnn
