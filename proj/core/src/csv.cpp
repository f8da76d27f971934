#include "bcsnn/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace bcsnn {

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open CSV file for writing: " + path);
  return out;
}

void finish_csv(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed while writing CSV file: " + path);
}

// Class names may come from directory names; quote anything that would
// collide with the delimiter.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string class_label(const std::vector<std::string>& class_names, std::size_t index) {
  if (index < class_names.size()) return csv_field(class_names[index]);
  return "class-" + std::to_string(index);
}

}  // namespace

std::string csv_fixed(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

void write_epoch_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& history,
                             bool include_timing) {
  std::ofstream out = open_csv(path);
  out << "epoch,train_loss,train_acc,val_loss,val_acc,seconds\n";
  for (const EpochMetrics& em : history) {
    out << em.epoch << ',' << csv_fixed(em.train_loss) << ',' << csv_fixed(em.train_accuracy)
        << ',' << csv_fixed(em.val_loss) << ',' << csv_fixed(em.val_accuracy) << ','
        << csv_fixed(include_timing ? em.seconds : 0.0) << '\n';
  }
  finish_csv(out, path);
}

void write_class_metrics_csv(const std::string& path, const ClassMetrics& metrics,
                             const std::vector<std::string>& class_names) {
  std::ofstream out = open_csv(path);
  out << "class,recall_pct,precision_pct,f1_pct,accuracy_pct\n";
  for (std::size_t c = 0; c < metrics.recall.size(); ++c) {
    out << class_label(class_names, c) << ',' << csv_fixed(metrics.recall[c]) << ','
        << csv_fixed(metrics.precision[c]) << ',' << csv_fixed(metrics.f1[c]) << ','
        << csv_fixed(metrics.accuracy) << '\n';
  }
  out << "macro_average," << csv_fixed(metrics.macro_recall) << ','
      << csv_fixed(metrics.macro_precision) << ',' << csv_fixed(metrics.macro_f1) << ','
      << csv_fixed(metrics.accuracy) << '\n';
  finish_csv(out, path);
}

void write_confusion_csv(const std::string& path, const ClassMetrics& metrics,
                         const std::vector<std::string>& class_names) {
  std::ofstream out = open_csv(path);
  out << "true_class";
  for (std::size_t c = 0; c < metrics.confusion.size(); ++c) {
    out << ",predicted_" << class_label(class_names, c);
  }
  out << '\n';
  for (std::size_t r = 0; r < metrics.confusion.size(); ++r) {
    out << class_label(class_names, r);
    for (std::int64_t count : metrics.confusion[r]) out << ',' << count;
    out << '\n';
  }
  finish_csv(out, path);
}

void write_uncertainty_csv(const std::string& path, const std::vector<UncertaintyRecord>& records) {
  std::ofstream out = open_csv(path);
  out << "sample_id,predicted,true_label,entropy_nats,mutual_information_nats,triage_flag\n";
  for (const UncertaintyRecord& r : records) {
    out << r.sample_id << ',' << r.predicted << ',' << r.true_label << ','
        << csv_fixed(r.entropy) << ',' << csv_fixed(r.mutual_information) << ','
        << (r.triage_flag ? 1 : 0) << '\n';
  }
  finish_csv(out, path);
}

void write_distribution_csv(const std::string& path, const std::vector<UncertaintyRecord>& records) {
  std::ofstream out = open_csv(path);
  out << "sample_id,entropy_nats,mutual_information_nats,correct\n";
  for (const UncertaintyRecord& r : records) {
    out << r.sample_id << ',' << csv_fixed(r.entropy) << ',' << csv_fixed(r.mutual_information)
        << ',' << (r.correct ? 1 : 0) << '\n';
  }
  finish_csv(out, path);
}

void write_comparison_csv(const std::string& path, const std::vector<CodingComparisonRow>& rows,
                          bool include_timing) {
  std::ofstream out = open_csv(path);
  out << "mode,accuracy_pct,train_seconds,mean_entropy_nats,mean_mi_nats\n";
  for (const CodingComparisonRow& row : rows) {
    out << csv_field(row.mode) << ',' << csv_fixed(row.accuracy_pct) << ','
        << csv_fixed(include_timing ? row.train_seconds : 0.0) << ','
        << csv_fixed(row.mean_entropy_nats) << ',' << csv_fixed(row.mean_mi_nats) << '\n';
  }
  finish_csv(out, path);
}

}  // namespace bcsnn
