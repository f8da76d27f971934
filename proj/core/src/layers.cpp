#include "bcsnn/layers.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <utility>

namespace bcsnn {
namespace {

// reduction geometry shared by the batchnorm paths: elements sit at
// base + n*channels*spatial + c*spatial + s
struct NormDims {
  int batch;
  int channels;
  std::int64_t spatial;
  std::int64_t per_channel() const { return static_cast<std::int64_t>(batch) * spatial; }
};

NormDims norm_dims(const Tensor& x, BatchNorm::Dim dim, int channels,
                   const std::string& who) {
  if (dim == BatchNorm::Dim::k1d) {
    if (x.rank() != 2 || x.dim(1) != channels) {
      throw std::invalid_argument(who + ": expected input [B, " +
                                  std::to_string(channels) + "], got " +
                                  shape_to_string(x.shape()));
    }
    return {x.dim(0), channels, 1};
  }
  if (x.rank() != 4 || x.dim(1) != channels) {
    throw std::invalid_argument(who + ": expected input [B, " +
                                std::to_string(channels) + ", H, W], got " +
                                shape_to_string(x.shape()));
  }
  return {x.dim(0), channels, static_cast<std::int64_t>(x.dim(2)) * x.dim(3)};
}

}  // namespace

const char* run_mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::kTrain: return "train";
    case RunMode::kEval: return "eval";
    case RunMode::kMcEval: return "mc-eval";
  }
  return "unknown";
}

RunMode run_mode_from_name(const std::string& name) {
  if (name == "train") return RunMode::kTrain;
  if (name == "eval") return RunMode::kEval;
  if (name == "mc-eval") return RunMode::kMcEval;
  throw std::invalid_argument("unknown run mode: " + name);
}

void Layer::begin_pass(const PassContext&) {}
void Layer::begin_backward() {}
std::vector<ParamRef> Layer::params() { return {}; }
std::vector<BufferRef> Layer::buffers() { return {}; }
void Layer::init_params(Rng&) {}

std::int64_t Layer::num_params() {
  std::int64_t n = 0;
  for (const auto& p : params()) n += p.value->size();
  return n;
}

void Layer::zero_grad() {
  for (auto& p : params()) p.grad->fill(0.0);
}

std::string Layer::name() const {
  return std::string(kind()) + "-" + std::to_string(index_);
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1) {
    throw std::invalid_argument("Conv2d: channels and kernel must be positive");
  }
  weight_ = Tensor({out_channels_, in_channels_, kernel_, kernel_});
  bias_ = Tensor({out_channels_});
  grad_weight_ = Tensor(weight_.shape());
  grad_bias_ = Tensor(bias_.shape());
}

std::vector<int> Conv2d::infer_output_shape(const std::vector<int>& in) const {
  if (in.size() != 3 || in[0] != in_channels_ || in[1] < kernel_ || in[2] < kernel_) {
    throw std::invalid_argument(
        name() + ": cannot apply " + std::to_string(kernel_) + "x" +
        std::to_string(kernel_) + " conv over " + std::to_string(in_channels_) +
        " channels to input " + shape_to_string(in));
  }
  return {out_channels_, in[1] - kernel_ + 1, in[2] - kernel_ + 1};
}

void Conv2d::begin_pass(const PassContext& ctx) {
  input_tape_.clear();
  if (ctx.record_tape) input_tape_.reserve(static_cast<size_t>(ctx.num_steps));
}

Tensor Conv2d::forward_step(const Tensor& x, const PassContext& ctx) {
  if (x.rank() != 4) {
    throw std::invalid_argument(name() + ": expected rank-4 input, got " +
                                shape_to_string(x.shape()));
  }
  infer_output_shape({x.dim(1), x.dim(2), x.dim(3)});
  const int batch = x.dim(0);
  const int ih = x.dim(2);
  const int iw = x.dim(3);
  const int oh = ih - kernel_ + 1;
  const int ow = iw - kernel_ + 1;
  Tensor y({batch, out_channels_, oh, ow});

  const double* xd = x.data();
  const double* wd = weight_.data();
  double* yd = y.data();
  const std::int64_t in_plane = static_cast<std::int64_t>(ih) * iw;
  const std::int64_t out_plane = static_cast<std::int64_t>(oh) * ow;

  for (int n = 0; n < batch; ++n) {
    for (int oc = 0; oc < out_channels_; ++oc) {
      double* yp = yd + (static_cast<std::int64_t>(n) * out_channels_ + oc) * out_plane;
      const double b = bias_[oc];
      for (std::int64_t i = 0; i < out_plane; ++i) yp[i] = b;
      for (int ic = 0; ic < in_channels_; ++ic) {
        const double* xp = xd + (static_cast<std::int64_t>(n) * in_channels_ + ic) * in_plane;
        const double* wk = wd + (static_cast<std::int64_t>(oc) * in_channels_ + ic) * kernel_ * kernel_;
        for (int kh = 0; kh < kernel_; ++kh) {
          for (int kw = 0; kw < kernel_; ++kw) {
            const double w = wk[kh * kernel_ + kw];
            for (int r = 0; r < oh; ++r) {
              const double* xrow = xp + static_cast<std::int64_t>(r + kh) * iw + kw;
              double* yrow = yp + static_cast<std::int64_t>(r) * ow;
              for (int c = 0; c < ow; ++c) yrow[c] += w * xrow[c];
            }
          }
        }
      }
    }
  }
  if (ctx.record_tape) input_tape_.push_back(x);
  return y;
}

Tensor Conv2d::backward_step(const Tensor& grad_out, int step) {
  if (step < 0 || static_cast<size_t>(step) >= input_tape_.size()) {
    throw std::logic_error(name() + ": no recorded tape entry for step " +
                           std::to_string(step));
  }
  const Tensor& x = input_tape_[static_cast<size_t>(step)];
  const int batch = x.dim(0);
  const int ih = x.dim(2);
  const int iw = x.dim(3);
  const int oh = ih - kernel_ + 1;
  const int ow = iw - kernel_ + 1;
  if (grad_out.rank() != 4 || grad_out.dim(0) != batch ||
      grad_out.dim(1) != out_channels_ || grad_out.dim(2) != oh ||
      grad_out.dim(3) != ow) {
    throw std::invalid_argument(name() + ": gradient shape " +
                                shape_to_string(grad_out.shape()) +
                                " does not match forward output");
  }
  Tensor grad_in(x.shape());

  const double* xd = x.data();
  const double* gd = grad_out.data();
  const double* wd = weight_.data();
  double* gid = grad_in.data();
  double* gwd = grad_weight_.data();
  const std::int64_t in_plane = static_cast<std::int64_t>(ih) * iw;
  const std::int64_t out_plane = static_cast<std::int64_t>(oh) * ow;

  for (int n = 0; n < batch; ++n) {
    for (int oc = 0; oc < out_channels_; ++oc) {
      const double* gp = gd + (static_cast<std::int64_t>(n) * out_channels_ + oc) * out_plane;
      double bias_acc = 0.0;
      for (std::int64_t i = 0; i < out_plane; ++i) bias_acc += gp[i];
      grad_bias_[oc] += bias_acc;
      for (int ic = 0; ic < in_channels_; ++ic) {
        const double* xp = xd + (static_cast<std::int64_t>(n) * in_channels_ + ic) * in_plane;
        double* gip = gid + (static_cast<std::int64_t>(n) * in_channels_ + ic) * in_plane;
        const std::int64_t wbase = (static_cast<std::int64_t>(oc) * in_channels_ + ic) * kernel_ * kernel_;
        for (int kh = 0; kh < kernel_; ++kh) {
          for (int kw = 0; kw < kernel_; ++kw) {
            const double w = wd[wbase + kh * kernel_ + kw];
            double wacc = 0.0;
            for (int r = 0; r < oh; ++r) {
              const double* xrow = xp + static_cast<std::int64_t>(r + kh) * iw + kw;
              double* girow = gip + static_cast<std::int64_t>(r + kh) * iw + kw;
              const double* grow = gp + static_cast<std::int64_t>(r) * ow;
              for (int c = 0; c < ow; ++c) {
                wacc += grow[c] * xrow[c];
                girow[c] += w * grow[c];
              }
            }
            gwd[wbase + kh * kernel_ + kw] += wacc;
          }
        }
      }
    }
  }
  return grad_in;
}

std::vector<ParamRef> Conv2d::params() {
  return {{"weight", &weight_, &grad_weight_}, {"bias", &bias_, &grad_bias_}};
}

void Conv2d::init_params(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels_) * kernel_ * kernel_);
  for (std::int64_t i = 0; i < weight_.size(); ++i) weight_[i] = rng.uniform(-bound, bound);
  for (std::int64_t i = 0; i < bias_.size(); ++i) bias_[i] = rng.uniform(-bound, bound);
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(int in_features, int out_features)
    : in_features_(in_features), out_features_(out_features) {
  if (in_features < 1 || out_features < 1) {
    throw std::invalid_argument("Linear: feature counts must be positive");
  }
  weight_ = Tensor({out_features_, in_features_});
  bias_ = Tensor({out_features_});
  grad_weight_ = Tensor(weight_.shape());
  grad_bias_ = Tensor(bias_.shape());
}

std::vector<int> Linear::infer_output_shape(const std::vector<int>& in) const {
  if (in.size() != 1 || in[0] != in_features_) {
    throw std::invalid_argument(name() + ": expected " +
                                std::to_string(in_features_) +
                                " input features, got " + shape_to_string(in));
  }
  return {out_features_};
}

void Linear::begin_pass(const PassContext& ctx) {
  input_tape_.clear();
  if (ctx.record_tape) input_tape_.reserve(static_cast<size_t>(ctx.num_steps));
}

Tensor Linear::forward_step(const Tensor& x, const PassContext& ctx) {
  if (x.rank() != 2 || x.dim(1) != in_features_) {
    throw std::invalid_argument(name() + ": expected input [B, " +
                                std::to_string(in_features_) + "], got " +
                                shape_to_string(x.shape()));
  }
  const int batch = x.dim(0);
  Tensor y({batch, out_features_});
  const double* xd = x.data();
  const double* wd = weight_.data();
  double* yd = y.data();
  for (int n = 0; n < batch; ++n) {
    const double* xrow = xd + static_cast<std::int64_t>(n) * in_features_;
    double* yrow = yd + static_cast<std::int64_t>(n) * out_features_;
    for (int o = 0; o < out_features_; ++o) {
      const double* wrow = wd + static_cast<std::int64_t>(o) * in_features_;
      double acc = bias_[o];
      for (int i = 0; i < in_features_; ++i) acc += wrow[i] * xrow[i];
      yrow[o] = acc;
    }
  }
  if (ctx.record_tape) input_tape_.push_back(x);
  return y;
}

Tensor Linear::backward_step(const Tensor& grad_out, int step) {
  if (step < 0 || static_cast<size_t>(step) >= input_tape_.size()) {
    throw std::logic_error(name() + ": no recorded tape entry for step " +
                           std::to_string(step));
  }
  const Tensor& x = input_tape_[static_cast<size_t>(step)];
  const int batch = x.dim(0);
  if (grad_out.rank() != 2 || grad_out.dim(0) != batch ||
      grad_out.dim(1) != out_features_) {
    throw std::invalid_argument(name() + ": gradient shape " +
                                shape_to_string(grad_out.shape()) +
                                " does not match forward output");
  }
  Tensor grad_in(x.shape());
  const double* xd = x.data();
  const double* gd = grad_out.data();
  const double* wd = weight_.data();
  double* gid = grad_in.data();
  double* gwd = grad_weight_.data();
  for (int n = 0; n < batch; ++n) {
    const double* xrow = xd + static_cast<std::int64_t>(n) * in_features_;
    const double* grow = gd + static_cast<std::int64_t>(n) * out_features_;
    double* girow = gid + static_cast<std::int64_t>(n) * in_features_;
    for (int o = 0; o < out_features_; ++o) {
      const double g = grow[o];
      if (g == 0.0) continue;  // spiking nets backpropagate many exact zeros
      const double* wrow = wd + static_cast<std::int64_t>(o) * in_features_;
      double* gwrow = gwd + static_cast<std::int64_t>(o) * in_features_;
      for (int i = 0; i < in_features_; ++i) {
        girow[i] += g * wrow[i];
        gwrow[i] += g * xrow[i];
      }
      grad_bias_[o] += g;
    }
  }
  return grad_in;
}

std::vector<ParamRef> Linear::params() {
  return {{"weight", &weight_, &grad_weight_}, {"bias", &bias_, &grad_bias_}};
}

void Linear::init_params(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features_));
  for (std::int64_t i = 0; i < weight_.size(); ++i) weight_[i] = rng.uniform(-bound, bound);
  for (std::int64_t i = 0; i < bias_.size(); ++i) bias_[i] = rng.uniform(-bound, bound);
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(Dim dim, int channels, double momentum, double eps)
    : dim_(dim), channels_(channels), momentum_(momentum), eps_(eps) {
  if (channels < 1) throw std::invalid_argument("BatchNorm: channels must be positive");
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw std::invalid_argument("BatchNorm: momentum must lie in [0, 1]");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("BatchNorm: eps must be positive");
  gamma_ = Tensor({channels_}, 1.0);
  shift_ = Tensor({channels_});
  grad_gamma_ = Tensor({channels_});
  grad_shift_ = Tensor({channels_});
  running_mean_ = Tensor({channels_});
  running_var_ = Tensor({channels_}, 1.0);
}

std::vector<int> BatchNorm::infer_output_shape(const std::vector<int>& in) const {
  const bool ok = dim_ == Dim::k1d ? (in.size() == 1 && in[0] == channels_)
                                   : (in.size() == 3 && in[0] == channels_);
  if (!ok) {
    throw std::invalid_argument(name() + ": input " + shape_to_string(in) +
                                " does not carry " + std::to_string(channels_) +
                                " channels");
  }
  return in;
}

void BatchNorm::begin_pass(const PassContext& ctx) {
  tape_.clear();
  if (ctx.record_tape) tape_.reserve(static_cast<size_t>(ctx.num_steps));
}

Tensor BatchNorm::forward_step(const Tensor& x, const PassContext& ctx) {
  const NormDims nd = norm_dims(x, dim_, channels_, name());
  const std::int64_t spatial = nd.spatial;
  const std::int64_t row = static_cast<std::int64_t>(channels_) * spatial;
  const std::int64_t count = nd.per_channel();
  const bool batch_stats = ctx.mode == RunMode::kTrain;

  StepCache cache;
  cache.batch_stats = batch_stats;
  cache.inv_std.resize(static_cast<size_t>(channels_));
  cache.xhat = Tensor(x.shape());

  const double* xd = x.data();
  double* hd = cache.xhat.data();
  Tensor y(x.shape());
  double* yd = y.data();

  for (int c = 0; c < channels_; ++c) {
    double mean;
    double inv_std;
    if (batch_stats) {
      double sum = 0.0;
      for (int n = 0; n < nd.batch; ++n) {
        const double* p = xd + n * row + c * spatial;
        for (std::int64_t s = 0; s < spatial; ++s) sum += p[s];
      }
      mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int n = 0; n < nd.batch; ++n) {
        const double* p = xd + n * row + c * spatial;
        for (std::int64_t s = 0; s < spatial; ++s) {
          const double d = p[s] - mean;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);  // biased, used for normalization
      inv_std = 1.0 / std::sqrt(var + eps_);
      running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
      if (count > 1) {
        // the running variance tracks the unbiased estimate
        const double var_unbiased = var * static_cast<double>(count) / static_cast<double>(count - 1);
        running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * var_unbiased;
      }
    } else {
      mean = running_mean_[c];
      inv_std = 1.0 / std::sqrt(running_var_[c] + eps_);
    }
    cache.inv_std[static_cast<size_t>(c)] = inv_std;
    const double g = gamma_[c];
    const double b = shift_[c];
    for (int n = 0; n < nd.batch; ++n) {
      const std::int64_t base = n * row + c * spatial;
      for (std::int64_t s = 0; s < spatial; ++s) {
        const double xhat = (xd[base + s] - mean) * inv_std;
        hd[base + s] = xhat;
        yd[base + s] = g * xhat + b;
      }
    }
  }
  if (ctx.record_tape) tape_.push_back(std::move(cache));
  return y;
}

Tensor BatchNorm::backward_step(const Tensor& grad_out, int step) {
  if (step < 0 || static_cast<size_t>(step) >= tape_.size()) {
    throw std::logic_error(name() + ": no recorded tape entry for step " +
                           std::to_string(step));
  }
  const StepCache& cache = tape_[static_cast<size_t>(step)];
  if (!grad_out.same_shape(cache.xhat)) {
    throw std::invalid_argument(name() + ": gradient shape " +
                                shape_to_string(grad_out.shape()) +
                                " does not match forward output");
  }
  const NormDims nd = norm_dims(grad_out, dim_, channels_, name());
  const std::int64_t spatial = nd.spatial;
  const std::int64_t row = static_cast<std::int64_t>(channels_) * spatial;
  const double count = static_cast<double>(nd.per_channel());

  Tensor grad_in(grad_out.shape());
  const double* gd = grad_out.data();
  const double* hd = cache.xhat.data();
  double* gid = grad_in.data();

  for (int c = 0; c < channels_; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (int n = 0; n < nd.batch; ++n) {
      const std::int64_t base = n * row + c * spatial;
      for (std::int64_t s = 0; s < spatial; ++s) {
        sum_g += gd[base + s];
        sum_gx += gd[base + s] * hd[base + s];
      }
    }
    grad_gamma_[c] += sum_gx;
    grad_shift_[c] += sum_g;
    const double coef = gamma_[c] * cache.inv_std[static_cast<size_t>(c)];
    if (cache.batch_stats) {
      const double mean_g = sum_g / count;
      const double mean_gx = sum_gx / count;
      for (int n = 0; n < nd.batch; ++n) {
        const std::int64_t base = n * row + c * spatial;
        for (std::int64_t s = 0; s < spatial; ++s) {
          gid[base + s] = coef * (gd[base + s] - mean_g - hd[base + s] * mean_gx);
        }
      }
    } else {
      // running statistics are constants w.r.t. the input
      for (int n = 0; n < nd.batch; ++n) {
        const std::int64_t base = n * row + c * spatial;
        for (std::int64_t s = 0; s < spatial; ++s) gid[base + s] = coef * gd[base + s];
      }
    }
  }
  return grad_in;
}

std::vector<ParamRef> BatchNorm::params() {
  return {{"gamma", &gamma_, &grad_gamma_}, {"shift", &shift_, &grad_shift_}};
}

std::vector<BufferRef> BatchNorm::buffers() {
  return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
}

// ---------------------------------------------------------------------------
// MaxPool2d

MaxPool2d::MaxPool2d(int pool) : pool_(pool) {
  if (pool < 1) throw std::invalid_argument("MaxPool2d: pool size must be positive");
}

std::vector<int> MaxPool2d::infer_output_shape(const std::vector<int>& in) const {
  if (in.size() != 3 || in[1] < pool_ || in[2] < pool_) {
    throw std::invalid_argument(name() + ": cannot pool input " + shape_to_string(in));
  }
  return {in[0], in[1] / pool_, in[2] / pool_};
}

void MaxPool2d::begin_pass(const PassContext& ctx) {
  input_shape_.clear();
  argmax_tape_.clear();
  if (ctx.record_tape) argmax_tape_.reserve(static_cast<size_t>(ctx.num_steps));
}

Tensor MaxPool2d::forward_step(const Tensor& x, const PassContext& ctx) {
  if (x.rank() != 4) {
    throw std::invalid_argument(name() + ": expected rank-4 input, got " +
                                shape_to_string(x.shape()));
  }
  infer_output_shape({x.dim(1), x.dim(2), x.dim(3)});
  const int batch = x.dim(0);
  const int channels = x.dim(1);
  const int ih = x.dim(2);
  const int iw = x.dim(3);
  const int oh = ih / pool_;
  const int ow = iw / pool_;
  Tensor y({batch, channels, oh, ow});
  std::vector<std::int64_t> argmax(static_cast<size_t>(y.size()));

  const double* xd = x.data();
  double* yd = y.data();
  std::int64_t out_i = 0;
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const std::int64_t plane = (static_cast<std::int64_t>(n) * channels + c) *
                                 static_cast<std::int64_t>(ih) * iw;
      for (int r = 0; r < oh; ++r) {
        for (int q = 0; q < ow; ++q) {
          // first occurrence wins ties, keeping the backward routing stable
          std::int64_t best_i = plane + static_cast<std::int64_t>(r * pool_) * iw + q * pool_;
          double best = xd[best_i];
          for (int pr = 0; pr < pool_; ++pr) {
            for (int pq = 0; pq < pool_; ++pq) {
              const std::int64_t i =
                  plane + static_cast<std::int64_t>(r * pool_ + pr) * iw + (q * pool_ + pq);
              if (xd[i] > best) {
                best = xd[i];
                best_i = i;
              }
            }
          }
          yd[out_i] = best;
          argmax[static_cast<size_t>(out_i)] = best_i;
          ++out_i;
        }
      }
    }
  }
  if (ctx.record_tape) {
    if (input_shape_.empty()) input_shape_ = x.shape();
    argmax_tape_.push_back(std::move(argmax));
  }
  return y;
}

Tensor MaxPool2d::backward_step(const Tensor& grad_out, int step) {
  if (step < 0 || static_cast<size_t>(step) >= argmax_tape_.size()) {
    throw std::logic_error(name() + ": no recorded tape entry for step " +
                           std::to_string(step));
  }
  const auto& argmax = argmax_tape_[static_cast<size_t>(step)];
  if (static_cast<size_t>(grad_out.size()) != argmax.size()) {
    throw std::invalid_argument(name() + ": gradient shape " +
                                shape_to_string(grad_out.shape()) +
                                " does not match forward output");
  }
  Tensor grad_in(input_shape_);
  for (std::int64_t i = 0; i < grad_out.size(); ++i) {
    grad_in[argmax[static_cast<size_t>(i)]] += grad_out[i];
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Dropout

Dropout::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("Dropout: rate must lie in [0, 1)");
  }
}

std::vector<int> Dropout::infer_output_shape(const std::vector<int>& in) const {
  return in;
}

void Dropout::begin_pass(const PassContext& ctx) {
  active_in_pass_ = ctx.mode != RunMode::kEval && rate_ > 0.0;
}

Tensor Dropout::forward_step(const Tensor& x, const PassContext&) {
  if (!active_in_pass_) return x;
  const int batch = x.dim(0);
  const std::int64_t features = x.size() / batch;
  if (mask_.size() != features) {
    throw std::logic_error(name() + ": no mask sampled for this pass (expected " +
                           std::to_string(features) + " entries, have " +
                           std::to_string(mask_.size()) + ")");
  }
  Tensor y(x.shape());
  const double* xd = x.data();
  const double* md = mask_.data();
  double* yd = y.data();
  for (int n = 0; n < batch; ++n) {
    const std::int64_t base = n * features;
    for (std::int64_t f = 0; f < features; ++f) yd[base + f] = xd[base + f] * md[f];
  }
  return y;
}

Tensor Dropout::backward_step(const Tensor& grad_out, int) {
  if (!active_in_pass_) return grad_out;
  const int batch = grad_out.dim(0);
  const std::int64_t features = grad_out.size() / batch;
  if (mask_.size() != features) {
    throw std::logic_error(name() + ": mask lost between forward and backward");
  }
  Tensor grad_in(grad_out.shape());
  const double* gd = grad_out.data();
  const double* md = mask_.data();
  double* gid = grad_in.data();
  for (int n = 0; n < batch; ++n) {
    const std::int64_t base = n * features;
    for (std::int64_t f = 0; f < features; ++f) gid[base + f] = gd[base + f] * md[f];
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Flatten

std::vector<int> Flatten::infer_output_shape(const std::vector<int>& in) const {
  if (in.empty()) {
    throw std::invalid_argument(name() + ": cannot flatten a scalar input");
  }
  return {static_cast<int>(shape_numel(in))};
}

void Flatten::begin_pass(const PassContext&) { input_shape_.clear(); }

Tensor Flatten::forward_step(const Tensor& x, const PassContext&) {
  if (x.rank() < 2) {
    throw std::invalid_argument(name() + ": expected a batched input, got " +
                                shape_to_string(x.shape()));
  }
  if (input_shape_.empty()) input_shape_ = x.shape();
  const int batch = x.dim(0);
  return x.reshaped({batch, static_cast<int>(x.size() / batch)});
}

Tensor Flatten::backward_step(const Tensor& grad_out, int) {
  if (input_shape_.empty()) {
    throw std::logic_error(name() + ": backward before any forward step");
  }
  return grad_out.reshaped(input_shape_);
}

// ---------------------------------------------------------------------------
// LifLayer

LifLayer::LifLayer(LifParams params) : params_(params) { params_.validate(); }

std::vector<int> LifLayer::infer_output_shape(const std::vector<int>& in) const {
  return in;
}

void LifLayer::begin_pass(const PassContext& ctx) {
  u_ = Tensor();
  pre_update_tape_.clear();
  if (ctx.record_tape) pre_update_tape_.reserve(static_cast<size_t>(ctx.num_steps));
}

Tensor LifLayer::forward_step(const Tensor& x, const PassContext& ctx) {
  if (u_.empty()) {
    u_ = Tensor(x.shape());  // membranes start at rest
  } else if (!u_.same_shape(x)) {
    throw std::invalid_argument(name() + ": input shape " +
                                shape_to_string(x.shape()) +
                                " changed mid-pass from " +
                                shape_to_string(u_.shape()));
  }
  if (ctx.record_tape) pre_update_tape_.push_back(u_);

  Tensor spikes(x.shape());
  const std::int64_t n = x.size();
  double* ud = u_.data();
  double* sd = spikes.data();
  const double* xd = x.data();
  if (ctx.relaxed) {
    for (std::int64_t i = 0; i < n; ++i) {
      const double s = fast_sigmoid(ud[i], params_);
      sd[i] = s;
      ud[i] = params_.beta * ud[i] + xd[i] - s * params_.theta;
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      const auto r = lif_scalar_step(ud[i], xd[i], params_);
      sd[i] = r.spike;
      ud[i] = r.u_next;
    }
  }
  return spikes;
}

void LifLayer::begin_backward() { carry_ = Tensor(); }

Tensor LifLayer::backward_step(const Tensor& grad_out, int step) {
  if (step < 0 || static_cast<size_t>(step) >= pre_update_tape_.size()) {
    throw std::logic_error(name() + ": no recorded tape entry for step " +
                           std::to_string(step));
  }
  const Tensor& u_pre = pre_update_tape_[static_cast<size_t>(step)];
  if (!grad_out.same_shape(u_pre)) {
    throw std::invalid_argument(name() + ": gradient shape " +
                                shape_to_string(grad_out.shape()) +
                                " does not match forward output");
  }
  if (carry_.empty()) carry_ = Tensor(grad_out.shape());

  // With g_u[t] = dL/du[t], the recurrence u[t+1] = beta*u[t] + I[t] - s[t]*theta
  // and s[t] = H(u[t] - theta) give, under the surrogate derivative sg:
  //   dL/dI[t] = g_u[t+1]                       (carried from the later step)
  //   g_u[t]   = g_s[t]*sg(u[t]) + g_u[t+1]*(beta - theta*sg(u[t]))
  // The theta term differentiates the reset pathway.
  Tensor grad_in = carry_;
  const std::int64_t n = grad_out.size();
  double* cd = carry_.data();
  const double* gd = grad_out.data();
  const double* ud = u_pre.data();
  for (std::int64_t i = 0; i < n; ++i) {
    const double sg = surrogate_grad(ud[i], params_);
    cd[i] = gd[i] * sg + cd[i] * (params_.beta - params_.theta * sg);
  }
  return grad_in;
}

}  // namespace bcsnn
