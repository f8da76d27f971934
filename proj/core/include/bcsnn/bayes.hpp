#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcsnn/coding.hpp"
#include "bcsnn/network.hpp"

namespace bcsnn {

// Outcome of Monte-Carlo-Dropout inference for one sample: the softmax
// distribution of every stochastic pass plus their per-class mean, which is
// the predictive distribution.
struct PredictiveSummary {
  std::vector<std::vector<double>> per_pass;  // [mc_passes][num_classes]
  std::vector<double> mean;                   // column average of per_pass

  int mc_passes() const { return static_cast<int>(per_pass.size()); }
  int num_classes() const {
    return per_pass.empty() ? static_cast<int>(mean.size())
                            : static_cast<int>(per_pass.front().size());
  }
  // argmax of the mean distribution, ties to the lowest index
  int predicted() const;
};

// Builds a summary from raw per-pass distributions (computes the mean).
// Throws std::invalid_argument when passes are empty or ragged.
PredictiveSummary summarize_passes(std::vector<std::vector<double>> per_pass);

// Runs mc_passes stochastic forward passes in mc-eval mode over a whole
// batch [B, C, H, W]; pass p draws its dropout masks from seed
// base_seed + p, so each pass is independently reproducible. Per-pass class
// probabilities are the softmax of the active coding's logits.
// Throws std::invalid_argument when mc_passes < 1.
std::vector<PredictiveSummary> mc_predict_batch(Network& network,
                                                const Tensor& batch_input,
                                                CodingMode mode, int num_steps,
                                                int mc_passes,
                                                std::uint64_t base_seed);

// Same, with one explicit seed per pass (pass p uses pass_seeds[p]).
std::vector<PredictiveSummary> mc_predict_batch(
    Network& network, const Tensor& batch_input, CodingMode mode,
    int num_steps, const std::vector<std::uint64_t>& pass_seeds);

// Single-sample convenience over an unbatched [C, H, W] input.
PredictiveSummary mc_predict(Network& network, const Tensor& image,
                             CodingMode mode, int num_steps, int mc_passes,
                             std::uint64_t base_seed);

// Shannon entropy -sum p*log(p) of a distribution, in nats, with
// 0*log(0) = 0. Throws std::invalid_argument when the input is not a
// simplex vector (entries >= 0 summing to 1 within 1e-9).
double predictive_entropy(const std::vector<double>& distribution);

// BALD-style epistemic uncertainty in nats:
//   MI = H(mean) + (1/T) * sum_t sum_c p_tc * log(p_tc)
// i.e. predictive entropy minus the average per-pass entropy. Tiny negative
// values from floating-point cancellation are clamped to 0 (and reported on
// stderr when below -1e-9).
double mutual_information(const PredictiveSummary& summary);

enum class UncertaintyMetric { kEntropy, kMutualInformation };
std::string uncertainty_metric_name(UncertaintyMetric metric);
UncertaintyMetric uncertainty_metric_from_name(const std::string& name);

// Per-sample row of an uncertainty report.
struct UncertaintyRecord {
  int sample_id = 0;
  int predicted = 0;
  int true_label = -1;  // -1 when unknown
  double entropy = 0.0;
  double mutual_information = 0.0;
  bool correct = false;
  bool triage_flag = false;

  double metric(UncertaintyMetric m) const {
    return m == UncertaintyMetric::kEntropy ? entropy : mutual_information;
  }
};

// Builds a record (without triage flag) from a summary and ground truth.
UncertaintyRecord make_uncertainty_record(int sample_id,
                                          const PredictiveSummary& summary,
                                          int true_label);

// Samples whose chosen metric is >= threshold, sorted descending by that
// metric (stable for equal values). Throws std::invalid_argument for a
// negative threshold.
std::vector<UncertaintyRecord> triage(const std::vector<UncertaintyRecord>& records,
                                      double threshold, UncertaintyMetric metric);

// Default triage settings.
inline constexpr double kDefaultTriageThreshold = 0.4;  // nats
inline constexpr int kDefaultMcPasses = 100;

}  // namespace bcsnn
