#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bcsnn/neuron.hpp"
#include "bcsnn/rng.hpp"
#include "bcsnn/tensor.hpp"

namespace bcsnn {

// How a forward pass treats the stochastic layers:
//   kTrain   — dropout active, batchnorm uses per-step batch statistics
//   kEval    — dropout off, batchnorm uses running statistics
//   kMcEval  — dropout active (Monte-Carlo sampling), batchnorm uses running
//              statistics; this is the test-time posterior-sampling mode
enum class RunMode { kTrain, kEval, kMcEval };

const char* run_mode_name(RunMode mode);
RunMode run_mode_from_name(const std::string& name);

// Per-pass settings threaded through every layer at every time step.
struct PassContext {
  RunMode mode = RunMode::kEval;
  // relaxed = true replaces the Heaviside spike rule with the fast-sigmoid
  // surrogate in the forward pass as well, making the whole network
  // continuously differentiable; used only by gradient checks
  bool relaxed = false;
  // record per-step caches for a later backward sweep
  bool record_tape = false;
  int num_steps = 0;
  int batch = 0;
  int step = 0;  // 0-based index of the step being executed
};

struct ParamRef {
  std::string name;  // "weight", "bias", "gamma", "shift"
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

struct BufferRef {
  std::string name;  // "running_mean", "running_var"
  Tensor* value = nullptr;
};

// One stage of the network. Layers are stepped once per simulated time step;
// stateful layers (LIF membranes) carry their state across steps of one pass,
// and every layer caches what its backward sweep needs when record_tape is
// set. backward_step is called with steps in decreasing order so the LIF
// layers can propagate their membrane gradient backward through time.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual const char* kind() const = 0;

  // per-sample shape inference (no batch dimension); throws
  // std::invalid_argument when the input shape does not fit the layer
  virtual std::vector<int> infer_output_shape(const std::vector<int>& in) const = 0;

  // reset state and per-step caches at the start of a forward pass
  virtual void begin_pass(const PassContext& ctx);

  virtual Tensor forward_step(const Tensor& x, const PassContext& ctx) = 0;

  // reset backward carries; parameter gradients are left untouched so callers
  // control accumulation via zero_grad
  virtual void begin_backward();

  // gradient w.r.t. this layer's input at time step `step` (0-based); throws
  // std::logic_error when the step cache was never recorded
  virtual Tensor backward_step(const Tensor& grad_out, int step) = 0;

  virtual std::vector<ParamRef> params();
  virtual std::vector<BufferRef> buffers();

  // seeded parameter initialization; layers without parameters ignore it
  virtual void init_params(Rng& rng);

  std::int64_t num_params();
  void zero_grad();

  // position in the network (1-based), assigned by Network::add; the display
  // name is "<kind>-<index>", e.g. "Conv2d-1"
  int index() const { return index_; }
  void set_index(int index) { index_ = index; }
  std::string name() const;

 private:
  int index_ = 0;
};

// 2-D convolution, stride 1, no padding. Input [B, C_in, H, W].
class Conv2d : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel);

  const char* kind() const override { return "Conv2d"; }
  std::vector<int> infer_output_shape(const std::vector<int>& in) const override;
  void begin_pass(const PassContext& ctx) override;
  Tensor forward_step(const Tensor& x, const PassContext& ctx) override;
  Tensor backward_step(const Tensor& grad_out, int step) override;
  std::vector<ParamRef> params() override;
  void init_params(Rng& rng) override;

  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  int in_channels_;
  int out_channels_;
  int kernel_;
  Tensor weight_;  // [out, in, k, k]
  Tensor bias_;    // [out]
  Tensor grad_weight_;
  Tensor grad_bias_;
  std::vector<Tensor> input_tape_;
};

// Fully connected layer. Input [B, F].
class Linear : public Layer {
 public:
  Linear(int in_features, int out_features);

  const char* kind() const override { return "Linear"; }
  std::vector<int> infer_output_shape(const std::vector<int>& in) const override;
  void begin_pass(const PassContext& ctx) override;
  Tensor forward_step(const Tensor& x, const PassContext& ctx) override;
  Tensor backward_step(const Tensor& grad_out, int step) override;
  std::vector<ParamRef> params() override;
  void init_params(Rng& rng) override;

  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  int in_features_;
  int out_features_;
  Tensor weight_;  // [out, in]
  Tensor bias_;    // [out]
  Tensor grad_weight_;
  Tensor grad_bias_;
  std::vector<Tensor> input_tape_;
};

// Batch normalization over the channel axis. In train mode statistics are
// computed per time step within the batch (and running statistics updated at
// every step); in eval and mc-eval modes the running statistics are used.
class BatchNorm : public Layer {
 public:
  enum class Dim { k1d, k2d };

  BatchNorm(Dim dim, int channels, double momentum = 0.1, double eps = 1e-5);

  const char* kind() const override {
    return dim_ == Dim::k1d ? "BatchNorm1d" : "BatchNorm2d";
  }
  std::vector<int> infer_output_shape(const std::vector<int>& in) const override;
  void begin_pass(const PassContext& ctx) override;
  Tensor forward_step(const Tensor& x, const PassContext& ctx) override;
  Tensor backward_step(const Tensor& grad_out, int step) override;
  std::vector<ParamRef> params() override;
  std::vector<BufferRef> buffers() override;

  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }

 private:
  struct StepCache {
    Tensor xhat;
    std::vector<double> inv_std;  // per channel
    bool batch_stats = false;
  };

  Dim dim_;
  int channels_;
  double momentum_;
  double eps_;
  Tensor gamma_;  // scale
  Tensor shift_;  // offset
  Tensor grad_gamma_;
  Tensor grad_shift_;
  Tensor running_mean_;
  Tensor running_var_;
  std::vector<StepCache> tape_;
};

// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
class MaxPool2d : public Layer {
 public:
  explicit MaxPool2d(int pool);

  const char* kind() const override { return "MaxPool2d"; }
  std::vector<int> infer_output_shape(const std::vector<int>& in) const override;
  void begin_pass(const PassContext& ctx) override;
  Tensor forward_step(const Tensor& x, const PassContext& ctx) override;
  Tensor backward_step(const Tensor& grad_out, int step) override;

 private:
  int pool_;
  std::vector<int> input_shape_;  // including batch, fixed within a pass
  // per step, flat input index of each output element's maximum
  std::vector<std::vector<std::int64_t>> argmax_tape_;
};

// Monte-Carlo dropout. One feature-shaped mask is sampled per forward pass
// (see sample_dropout_masks) and held fixed across all time steps and batch
// rows, so a pass corresponds to a single sampled weight realization. Active
// in train and mc-eval modes, identity in eval mode.
class Dropout : public Layer {
 public:
  explicit Dropout(double rate);

  const char* kind() const override { return "Dropout"; }
  std::vector<int> infer_output_shape(const std::vector<int>& in) const override;
  void begin_pass(const PassContext& ctx) override;
  Tensor forward_step(const Tensor& x, const PassContext& ctx) override;
  Tensor backward_step(const Tensor& grad_out, int step) override;

  double rate() const { return rate_; }
  // install the mask for the coming pass; entries are 0 or 1/(1 - rate)
  void set_mask(Tensor mask) { mask_ = std::move(mask); }
  const Tensor& mask() const { return mask_; }

 private:
  double rate_;
  Tensor mask_;  // per-sample feature shape
  bool active_in_pass_ = false;
};

// Collapses the per-sample shape to one dimension.
class Flatten : public Layer {
 public:
  Flatten() = default;

  const char* kind() const override { return "Flatten"; }
  std::vector<int> infer_output_shape(const std::vector<int>& in) const override;
  void begin_pass(const PassContext& ctx) override;
  Tensor forward_step(const Tensor& x, const PassContext& ctx) override;
  Tensor backward_step(const Tensor& grad_out, int step) override;

 private:
  std::vector<int> input_shape_;  // including batch, fixed within a pass
};

// Leaky integrate-and-fire nonlinearity applied elementwise to any shape.
// Membrane state starts at zero, persists across the time steps of one pass,
// and follows the pre-update spike convention of lif_scalar_step. In relaxed
// mode the emitted "spike" is the fast-sigmoid value and the same value feeds
// the reset term, so forward and backward use one consistent smooth system.
class LifLayer : public Layer {
 public:
  explicit LifLayer(LifParams params);

  const char* kind() const override { return "Leaky"; }
  std::vector<int> infer_output_shape(const std::vector<int>& in) const override;
  void begin_pass(const PassContext& ctx) override;
  Tensor forward_step(const Tensor& x, const PassContext& ctx) override;
  void begin_backward() override;
  Tensor backward_step(const Tensor& grad_out, int step) override;

  const LifParams& lif_params() const { return params_; }
  // post-update membrane potential after the most recent step
  const Tensor& membrane() const { return u_; }

 private:
  LifParams params_;
  Tensor u_;      // state: membrane after the latest update
  Tensor carry_;  // backward state: dL/du[t+1]
  std::vector<Tensor> pre_update_tape_;  // u entering each step
};

}  // namespace bcsnn
