#pragma once

#include <string>
#include <vector>

#include "bcsnn/bayes.hpp"
#include "bcsnn/trainer.hpp"

namespace bcsnn {

// Formats a value with six fixed decimals, the format used by every numeric
// CSV column so reruns of a deterministic pipeline produce identical bytes.
std::string csv_fixed(double value);

// epoch,train_loss,train_acc,val_loss,val_acc,seconds
// The seconds column is written as 0.000000 unless include_timing is set;
// wall-clock noise would otherwise break byte-identical reruns.
void write_epoch_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& history,
                             bool include_timing);

// class,recall_pct,precision_pct,f1_pct,accuracy_pct with one row per class
// (overall accuracy repeated) and a trailing macro-average row.
void write_class_metrics_csv(const std::string& path, const ClassMetrics& metrics,
                             const std::vector<std::string>& class_names);

// Confusion counts, true classes as rows and predicted classes as columns.
void write_confusion_csv(const std::string& path, const ClassMetrics& metrics,
                         const std::vector<std::string>& class_names);

// sample_id,predicted,true_label,entropy_nats,mutual_information_nats,triage_flag
void write_uncertainty_csv(const std::string& path, const std::vector<UncertaintyRecord>& records);

// sample_id,entropy_nats,mutual_information_nats,correct — the per-sample
// uncertainty distribution split by prediction correctness.
void write_distribution_csv(const std::string& path, const std::vector<UncertaintyRecord>& records);

struct CodingComparisonRow {
  std::string mode;
  double accuracy_pct = 0.0;
  double train_seconds = 0.0;
  double mean_entropy_nats = 0.0;
  double mean_mi_nats = 0.0;
};

// mode,accuracy_pct,train_seconds,mean_entropy_nats,mean_mi_nats
void write_comparison_csv(const std::string& path, const std::vector<CodingComparisonRow>& rows,
                          bool include_timing);

}  // namespace bcsnn
