#include "bcsnn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bcsnn/rng.hpp"

namespace bcsnn {

namespace {

// Packs dataset samples indices[first, last) into one [N, C, H, W] batch.
Tensor make_batch(const Dataset& dataset, const std::vector<int>& indices,
                  std::size_t first, std::size_t last) {
  const Tensor& proto = dataset.samples.at(indices.at(first)).image;
  std::vector<int> shape{static_cast<int>(last - first)};
  for (int d = 0; d < proto.rank(); ++d) shape.push_back(proto.dim(d));
  Tensor batch(shape);
  const std::int64_t stride = proto.size();
  for (std::size_t i = first; i < last; ++i) {
    const Tensor& image = dataset.samples[indices[i]].image;
    if (!image.same_shape(proto)) {
      throw std::invalid_argument("batch assembly: samples have mixed image shapes");
    }
    std::memcpy(batch.data() + static_cast<std::int64_t>(i - first) * stride,
                image.data(), static_cast<std::size_t>(stride) * sizeof(double));
  }
  return batch;
}

// Decoder prediction for one sample of a completed pass.
int decode_predicted(const TimeTape& tape, int sample, CodingMode mode) {
  SpikeRecord record = spike_record_for_sample(tape, sample);
  if (mode == CodingMode::kRate) return rate_decode(record).predicted;
  return first_spike_decode(record).predicted;
}

void check_labels(const Dataset& dataset, int num_classes, const char* where) {
  for (const Sample& sample : dataset.samples) {
    if (sample.label < 0 || sample.label >= num_classes) {
      throw std::invalid_argument(std::string(where) + ": sample label " +
                                  std::to_string(sample.label) +
                                  " is outside the network's " +
                                  std::to_string(num_classes) + " classes");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("TrainConfig: learning_rate must be finite and >= 0");
  }
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (num_steps < 1) throw std::invalid_argument("TrainConfig: num_steps must be >= 1");
}

ClassMetrics metrics_from_confusion(const std::vector<std::vector<std::int64_t>>& confusion) {
  const std::size_t classes = confusion.size();
  if (classes == 0) throw std::invalid_argument("metrics_from_confusion: empty matrix");
  for (const auto& row : confusion) {
    if (row.size() != classes) {
      throw std::invalid_argument("metrics_from_confusion: matrix is not square");
    }
  }

  ClassMetrics m;
  m.confusion = confusion;
  m.recall.resize(classes, 0.0);
  m.precision.resize(classes, 0.0);
  m.f1.resize(classes, 0.0);

  std::int64_t trace = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::int64_t support = 0;   // row sum: samples whose true class is c
    std::int64_t predicted = 0; // column sum: samples predicted as c
    for (std::size_t j = 0; j < classes; ++j) {
      support += confusion[c][j];
      predicted += confusion[j][c];
      m.total += confusion[c][j];
    }
    const std::int64_t tp = confusion[c][c];
    trace += tp;
    if (support > 0) m.recall[c] = 100.0 * static_cast<double>(tp) / static_cast<double>(support);
    if (predicted > 0) {
      m.precision[c] = 100.0 * static_cast<double>(tp) / static_cast<double>(predicted);
    }
    // harmonic mean, 0 when both contributions vanish
    if (m.recall[c] + m.precision[c] > 0.0) {
      m.f1[c] = 2.0 * m.recall[c] * m.precision[c] / (m.recall[c] + m.precision[c]);
    }
  }
  for (std::size_t c = 0; c < classes; ++c) {
    m.macro_recall += m.recall[c];
    m.macro_precision += m.precision[c];
    m.macro_f1 += m.f1[c];
  }
  m.macro_recall /= static_cast<double>(classes);
  m.macro_precision /= static_cast<double>(classes);
  m.macro_f1 /= static_cast<double>(classes);
  if (m.total > 0) m.accuracy = 100.0 * static_cast<double>(trace) / static_cast<double>(m.total);
  return m;
}

AdamOptimizer::AdamOptimizer(double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("AdamOptimizer: learning rate must be finite and >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("AdamOptimizer: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("AdamOptimizer: eps must be positive");
}

void AdamOptimizer::step(Network& network) {
  std::vector<ParamRef> params = network.all_params();
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const ParamRef& p : params) {
      m_.emplace_back(std::vector<int>(p.value->shape().begin(), p.value->shape().end()));
      v_.emplace_back(std::vector<int>(p.value->shape().begin(), p.value->shape().end()));
    }
  }
  if (params.size() != m_.size()) {
    throw std::logic_error("AdamOptimizer: the network's parameter list changed between steps");
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& value = *params[i].value;
    const Tensor& grad = *params[i].grad;
    if (!value.same_shape(m_[i])) {
      throw std::logic_error("AdamOptimizer: parameter '" + params[i].name +
                             "' changed shape between steps");
    }
    double* pv = value.data();
    const double* pg = grad.data();
    double* pm = m_[i].data();
    double* pw = v_[i].data();
    const std::int64_t n = value.size();
    for (std::int64_t j = 0; j < n; ++j) {
      const double g = pg[j];
      pm[j] = beta1_ * pm[j] + (1.0 - beta1_) * g;
      pw[j] = beta2_ * pw[j] + (1.0 - beta2_) * g * g;
      pv[j] -= lr_ * (pm[j] / bc1) / (std::sqrt(pw[j] / bc2) + eps_);
    }
  }
}

std::vector<EpochMetrics> train(Network& network, const Dataset& train_set,
                                const Dataset* validation_set, const TrainConfig& config) {
  config.validate();
  if (train_set.samples.empty()) {
    throw std::invalid_argument("train: the training set is empty");
  }
  check_labels(train_set, network.num_classes(), "train");
  if (validation_set != nullptr) {
    check_labels(*validation_set, network.num_classes(), "train (validation set)");
  }

  AdamOptimizer adam(config.learning_rate);
  std::vector<int> order(train_set.samples.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochMetrics> history;
  history.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();

    // fresh shuffle per epoch, derived from the run seed
    Rng shuffle_rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::int64_t correct = 0;
    const std::size_t n = order.size();
    std::size_t batch_index = 0;

    for (std::size_t first = 0; first < n; first += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t last = std::min(n, first + static_cast<std::size_t>(config.batch_size));
      const int batch_count = static_cast<int>(last - first);
      Tensor batch = make_batch(train_set, order, first, last);

      ForwardOptions opts;
      opts.num_steps = config.num_steps;
      opts.mode = RunMode::kTrain;
      opts.pass_seed = mix_seed(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)),
                                static_cast<std::uint64_t>(batch_index) + 1);
      TimeTape tape = network.forward(batch, opts);

      // per-sample losses and the logit gradients of the batch-mean loss
      std::vector<std::vector<double>> logit_grads(
          static_cast<std::size_t>(batch_count),
          std::vector<double>(static_cast<std::size_t>(network.num_classes()), 0.0));
      double batch_loss = 0.0;
      for (int b = 0; b < batch_count; ++b) {
        const int label = train_set.samples[order[first + static_cast<std::size_t>(b)]].label;
        SpikeRecord record = spike_record_for_sample(tape, b);
        const std::vector<double> logits = logits_for(record, config.coding);
        SoftmaxLoss sl = softmax_cross_entropy(logits, label);
        batch_loss += sl.loss;
        for (std::size_t c = 0; c < sl.loss_grad.size(); ++c) {
          logit_grads[static_cast<std::size_t>(b)][c] =
              sl.loss_grad[c] / static_cast<double>(batch_count);
        }
        if (decode_predicted(tape, b, config.coding) == label) ++correct;
      }
      batch_loss /= static_cast<double>(batch_count);
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_index + 1) +
                                 " (diverged; lower the learning rate)");
      }
      loss_sum += batch_loss * static_cast<double>(batch_count);

      network.zero_grad();
      bptt_backward(network, tape, config.coding, logit_grads);
      adam.step(network);
      ++batch_index;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_sum / static_cast<double>(n);
    em.train_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(n);
    if (validation_set != nullptr && !validation_set->samples.empty()) {
      const auto [vl, va] =
          eval_loss_accuracy(network, *validation_set, config.coding, config.num_steps);
      em.val_loss = vl;
      em.val_accuracy = va;
    }
    em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    if (config.verbose) {
      std::fprintf(stderr,
                   "epoch %d/%d  train_loss=%.4f  train_acc=%.2f%%  val_loss=%.4f  "
                   "val_acc=%.2f%%  (%.1fs)\n",
                   epoch, config.epochs, em.train_loss, em.train_accuracy, em.val_loss,
                   em.val_accuracy, em.seconds);
    }
    history.push_back(em);
  }
  return history;
}

std::pair<double, double> eval_loss_accuracy(Network& network, const Dataset& dataset,
                                             CodingMode coding, int num_steps, int eval_batch) {
  if (dataset.samples.empty()) {
    throw std::invalid_argument("eval_loss_accuracy: the dataset is empty");
  }
  if (eval_batch < 1) throw std::invalid_argument("eval_loss_accuracy: eval_batch must be >= 1");
  check_labels(dataset, network.num_classes(), "eval_loss_accuracy");

  std::vector<int> order(dataset.samples.size());
  std::iota(order.begin(), order.end(), 0);

  double loss_sum = 0.0;
  std::int64_t correct = 0;
  const std::size_t n = order.size();
  for (std::size_t first = 0; first < n; first += static_cast<std::size_t>(eval_batch)) {
    const std::size_t last = std::min(n, first + static_cast<std::size_t>(eval_batch));
    Tensor batch = make_batch(dataset, order, first, last);
    ForwardOptions opts;
    opts.num_steps = num_steps;
    opts.mode = RunMode::kEval;
    TimeTape tape = network.forward(batch, opts);
    for (std::size_t i = first; i < last; ++i) {
      const int b = static_cast<int>(i - first);
      const int label = dataset.samples[order[i]].label;
      SpikeRecord record = spike_record_for_sample(tape, b);
      loss_sum += softmax_cross_entropy(logits_for(record, coding), label).loss;
      if (decode_predicted(tape, b, coding) == label) ++correct;
    }
  }
  return {loss_sum / static_cast<double>(n),
          100.0 * static_cast<double>(correct) / static_cast<double>(n)};
}

EvalResult evaluate(Network& network, const Dataset& test_set, const EvalConfig& config) {
  if (test_set.samples.empty()) {
    throw std::invalid_argument("evaluate: the test set is empty");
  }
  if (config.num_steps < 1) throw std::invalid_argument("evaluate: num_steps must be >= 1");
  if (config.eval_batch < 1) throw std::invalid_argument("evaluate: eval_batch must be >= 1");
  if (config.mc && config.mc_passes < 1) {
    throw std::invalid_argument("evaluate: mc_passes must be >= 1");
  }
  if (!(config.triage_threshold >= 0.0)) {
    throw std::invalid_argument("evaluate: triage threshold must be >= 0");
  }
  const int classes = network.num_classes();
  check_labels(test_set, classes, "evaluate");

  std::vector<int> order(test_set.samples.size());
  std::iota(order.begin(), order.end(), 0);

  EvalResult result;
  std::vector<std::vector<std::int64_t>> confusion(
      static_cast<std::size_t>(classes),
      std::vector<std::int64_t>(static_cast<std::size_t>(classes), 0));

  const std::size_t n = order.size();
  for (std::size_t first = 0; first < n; first += static_cast<std::size_t>(config.eval_batch)) {
    const std::size_t last = std::min(n, first + static_cast<std::size_t>(config.eval_batch));
    Tensor batch = make_batch(test_set, order, first, last);

    if (config.mc) {
      // masks are shared across the batch, so chunking does not change the
      // per-sample predictive distributions
      std::vector<PredictiveSummary> summaries = mc_predict_batch(
          network, batch, config.coding, config.num_steps, config.mc_passes, config.seed);
      for (std::size_t i = first; i < last; ++i) {
        const PredictiveSummary& summary = summaries[i - first];
        const int label = test_set.samples[order[i]].label;
        UncertaintyRecord record =
            make_uncertainty_record(static_cast<int>(i), summary, label);
        record.triage_flag = record.metric(config.metric) >= config.triage_threshold;
        confusion[static_cast<std::size_t>(label)][static_cast<std::size_t>(record.predicted)]++;
        result.report.push_back(std::move(record));
      }
    } else {
      ForwardOptions opts;
      opts.num_steps = config.num_steps;
      opts.mode = RunMode::kEval;
      TimeTape tape = network.forward(batch, opts);
      for (std::size_t i = first; i < last; ++i) {
        const int label = test_set.samples[order[i]].label;
        const int predicted =
            decode_predicted(tape, static_cast<int>(i - first), config.coding);
        confusion[static_cast<std::size_t>(label)][static_cast<std::size_t>(predicted)]++;
      }
    }
  }
  result.metrics = metrics_from_confusion(confusion);
  return result;
}

}  // namespace bcsnn
