#include "bcsnn/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace bcsnn {

int PredictiveSummary::predicted() const {
  int best = 0;
  for (size_t c = 1; c < mean.size(); ++c) {
    if (mean[c] > mean[static_cast<size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

PredictiveSummary summarize_passes(std::vector<std::vector<double>> per_pass) {
  if (per_pass.empty()) {
    throw std::invalid_argument("summarize_passes: need at least one pass");
  }
  const size_t classes = per_pass.front().size();
  if (classes == 0) {
    throw std::invalid_argument("summarize_passes: passes carry no classes");
  }
  for (const auto& row : per_pass) {
    if (row.size() != classes) {
      throw std::invalid_argument("summarize_passes: ragged pass rows");
    }
  }
  PredictiveSummary summary;
  summary.mean.assign(classes, 0.0);
  for (const auto& row : per_pass) {
    for (size_t c = 0; c < classes; ++c) summary.mean[c] += row[c];
  }
  for (auto& v : summary.mean) v /= static_cast<double>(per_pass.size());
  summary.per_pass = std::move(per_pass);
  return summary;
}

std::vector<PredictiveSummary> mc_predict_batch(
    Network& network, const Tensor& batch_input, CodingMode mode,
    int num_steps, const std::vector<std::uint64_t>& pass_seeds) {
  if (pass_seeds.empty()) {
    throw std::invalid_argument("mc_predict: mc_passes must be >= 1");
  }
  const int batch = batch_input.dim(0);
  std::vector<std::vector<std::vector<double>>> per_sample(
      static_cast<size_t>(batch));
  for (auto& rows : per_sample) rows.reserve(pass_seeds.size());

  ForwardOptions opts;
  opts.num_steps = num_steps;
  opts.mode = RunMode::kMcEval;
  for (const std::uint64_t seed : pass_seeds) {
    opts.pass_seed = seed;
    const TimeTape tape = network.forward(batch_input, opts);
    for (int b = 0; b < batch; ++b) {
      const SpikeRecord record = spike_record_for_sample(tape, b);
      per_sample[static_cast<size_t>(b)].push_back(
          softmax(logits_for(record, mode)));
    }
  }
  std::vector<PredictiveSummary> out;
  out.reserve(static_cast<size_t>(batch));
  for (auto& rows : per_sample) out.push_back(summarize_passes(std::move(rows)));
  return out;
}

std::vector<PredictiveSummary> mc_predict_batch(Network& network,
                                                const Tensor& batch_input,
                                                CodingMode mode, int num_steps,
                                                int mc_passes,
                                                std::uint64_t base_seed) {
  if (mc_passes < 1) {
    throw std::invalid_argument("mc_predict: mc_passes must be >= 1");
  }
  std::vector<std::uint64_t> seeds(static_cast<size_t>(mc_passes));
  for (int p = 0; p < mc_passes; ++p) {
    seeds[static_cast<size_t>(p)] = base_seed + static_cast<std::uint64_t>(p);
  }
  return mc_predict_batch(network, batch_input, mode, num_steps, seeds);
}

PredictiveSummary mc_predict(Network& network, const Tensor& image,
                             CodingMode mode, int num_steps, int mc_passes,
                             std::uint64_t base_seed) {
  std::vector<int> batched_shape;
  batched_shape.push_back(1);
  for (int d : image.shape()) batched_shape.push_back(d);
  Tensor batch = image.reshaped(batched_shape);
  return mc_predict_batch(network, batch, mode, num_steps, mc_passes, base_seed)
      .front();
}

double predictive_entropy(const std::vector<double>& distribution) {
  if (distribution.empty()) {
    throw std::invalid_argument("predictive_entropy: empty distribution");
  }
  double sum = 0.0;
  for (const double p : distribution) {
    if (!(p >= 0.0)) {
      throw std::invalid_argument(
          "predictive_entropy: distribution has a negative entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "predictive_entropy: distribution sums to " + std::to_string(sum) +
        ", not 1");
  }
  double h = 0.0;
  for (const double p : distribution) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double mutual_information(const PredictiveSummary& summary) {
  if (summary.per_pass.empty() ||
      summary.mean.size() != summary.per_pass.front().size()) {
    throw std::invalid_argument("mutual_information: malformed summary");
  }
  double mi = predictive_entropy(summary.mean);
  const double inv_passes = 1.0 / static_cast<double>(summary.mc_passes());
  for (const auto& row : summary.per_pass) {
    for (const double p : row) {
      if (p > 0.0) mi += inv_passes * p * std::log(p);
    }
  }
  if (mi < 0.0) {
    if (mi < -1e-9) {
      std::cerr << "mutual_information: clamping " << mi << " to 0\n";
    }
    mi = 0.0;
  }
  return mi;
}

std::string uncertainty_metric_name(UncertaintyMetric metric) {
  return metric == UncertaintyMetric::kEntropy ? "entropy" : "mi";
}

UncertaintyMetric uncertainty_metric_from_name(const std::string& name) {
  if (name == "entropy") return UncertaintyMetric::kEntropy;
  if (name == "mi") return UncertaintyMetric::kMutualInformation;
  throw std::invalid_argument("unknown uncertainty metric: " + name +
                              " (expected entropy or mi)");
}

UncertaintyRecord make_uncertainty_record(int sample_id,
                                          const PredictiveSummary& summary,
                                          int true_label) {
  UncertaintyRecord rec;
  rec.sample_id = sample_id;
  rec.predicted = summary.predicted();
  rec.true_label = true_label;
  rec.entropy = predictive_entropy(summary.mean);
  rec.mutual_information = mutual_information(summary);
  rec.correct = true_label >= 0 && rec.predicted == true_label;
  return rec;
}

std::vector<UncertaintyRecord> triage(const std::vector<UncertaintyRecord>& records,
                                      double threshold, UncertaintyMetric metric) {
  if (threshold < 0.0) {
    throw std::invalid_argument("triage: threshold must be >= 0");
  }
  std::vector<UncertaintyRecord> out;
  for (const auto& rec : records) {
    if (rec.metric(metric) >= threshold) {
      out.push_back(rec);
      out.back().triage_flag = true;
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [metric](const UncertaintyRecord& a, const UncertaintyRecord& b) {
                     return a.metric(metric) > b.metric(metric);
                   });
  return out;
}

}  // namespace bcsnn
