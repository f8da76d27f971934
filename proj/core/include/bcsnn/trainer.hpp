#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bcsnn/bayes.hpp"
#include "bcsnn/coding.hpp"
#include "bcsnn/data.hpp"
#include "bcsnn/network.hpp"

namespace bcsnn {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 20;
  int epochs = 1;
  int num_steps = 25;
  CodingMode coding = CodingMode::kRate;
  bool mc_dropout = true;  // whether downstream evaluation attaches uncertainty
  std::uint64_t seed = 0;
  bool verbose = false;  // per-epoch progress on stderr

  // throws std::invalid_argument; a zero learning rate is allowed (degenerate
  // but well defined: parameters stay fixed)
  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;      // mean per-sample cross-entropy
  double train_accuracy = 0.0;  // percent
  double val_loss = 0.0;        // 0 when no validation set was given
  double val_accuracy = 0.0;
  double seconds = 0.0;  // wall-clock time of the epoch
};

struct ClassMetrics {
  std::vector<std::vector<std::int64_t>> confusion;  // [true][predicted]
  std::vector<double> recall;     // percent, per class
  std::vector<double> precision;  // percent, per class
  std::vector<double> f1;         // percent, per class
  double macro_recall = 0.0;
  double macro_precision = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;  // percent
  std::int64_t total = 0;
};

// Derives recall/precision/F1 per class (0 where undefined), their macro
// averages, and overall accuracy from a square confusion matrix.
ClassMetrics metrics_from_confusion(const std::vector<std::vector<std::int64_t>>& confusion);

// Standard ADAM with bias-corrected moments. Moment buffers are allocated on
// the first step and keyed to the network's parameter list.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double learning_rate, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);

  // one update from the currently accumulated gradients
  void step(Network& network);

  std::int64_t steps_taken() const { return t_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

// Minibatch training over the time-stepped network: forward in train mode,
// softmax cross-entropy on the coding's logits, BPTT, ADAM update. Shuffling
// and dropout are derived from config.seed, making the whole run
// deterministic. The final partial batch is included. Throws
// std::runtime_error with epoch/batch context when the loss turns non-finite.
std::vector<EpochMetrics> train(Network& network, const Dataset& train_set,
                                const Dataset* validation_set,
                                const TrainConfig& config);

struct EvalConfig {
  CodingMode coding = CodingMode::kRate;
  int num_steps = 25;
  bool mc = false;  // Monte-Carlo dropout inference
  int mc_passes = kDefaultMcPasses;
  std::uint64_t seed = 0;  // base seed for the MC pass masks
  double triage_threshold = kDefaultTriageThreshold;
  UncertaintyMetric metric = UncertaintyMetric::kEntropy;
  int eval_batch = 64;
};

struct EvalResult {
  ClassMetrics metrics;
  // one record per test sample when mc is on; empty otherwise
  std::vector<UncertaintyRecord> report;
};

// Deterministic single-pass evaluation (mc off) or MC-dropout evaluation
// where the prediction is the argmax of the mean predictive distribution and
// every sample gets an uncertainty record (mc on). Throws
// std::invalid_argument on an empty test set.
EvalResult evaluate(Network& network, const Dataset& test_set, const EvalConfig& config);

// Mean cross-entropy loss and accuracy (percent) of a plain eval-mode pass;
// used for validation curves.
std::pair<double, double> eval_loss_accuracy(Network& network, const Dataset& dataset,
                                             CodingMode coding, int num_steps,
                                             int eval_batch = 64);

}  // namespace bcsnn
