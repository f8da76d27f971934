#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcsnn/network.hpp"
#include "bcsnn/neuron.hpp"

namespace bcsnn {

// Block grammar of the convolutional spiking classifier, parameterized by
// width so the same builder produces the full-scale model and desk-scale
// variants. Each conv entry expands to Conv -> BatchNorm2d -> Leaky ->
// MaxPool; after a Flatten, each hidden entry expands to Linear ->
// BatchNorm1d -> Leaky -> Dropout; the head is Linear -> BatchNorm1d ->
// Leaky with the output layer recording both spikes and membranes.
struct ArchitectureSpec {
  int input_channels = 3;
  int input_size = 128;  // square spatial edge
  int conv_kernel = 3;   // stride 1, no padding
  int pool = 2;
  std::vector<int> conv_filters;
  std::vector<int> hidden_widths;
  std::vector<double> dropout_rates;  // one per hidden block
  int num_classes = 2;
  LifParams lif;
  std::uint64_t init_seed = 0;

  // throws std::invalid_argument when inconsistent or spatially collapsing
  void validate() const;

  // features entering the first linear layer, from the conv shape arithmetic
  int flatten_width() const;
};

// Full-scale architecture: convs 64/128/256/512 on 3x128x128 input, linear
// widths 4096/128/64/32 with dropout 0.5/0.3/0.2/0.2, then the class head.
// 77,597,926 trainable parameters at num_classes = 2.
ArchitectureSpec paper_architecture(int num_classes);

// Desk-scale variant for end-to-end runs: convs 8/16 on 3x32x32, one hidden
// linear block of 64 with dropout 0.2.
ArchitectureSpec desk_architecture(int num_classes = 2);

// Minimal differentiable instance for finite-difference gradient checks:
// convs 4/6 on 3x16x16, one hidden block of 16 with dropout 0 (824
// parameters at 2 classes).
ArchitectureSpec gradcheck_architecture(int num_classes = 2);

// Builds and initializes a network from a validated spec.
Network build_model(const ArchitectureSpec& spec);

// Full-scale model; num_classes must be 2 or 3.
Network build_paper_model(int num_classes);

// Desk-scale model from an explicit spec (alias of build_model kept for the
// reduced-width use case).
Network build_desk_model(const ArchitectureSpec& spec);

struct SummaryRow {
  std::string layer;         // e.g. "Conv2d-1"
  std::string output_shape;  // e.g. "[-1, 64, 126, 126]"
  std::int64_t param_count = 0;
};

// One row per layer; the output layer shows its dual spike/membrane shape
// as "[[-1, C], [-1, C]]".
std::vector<SummaryRow> summary_rows(Network& network);

// Tabular architecture printout (layer, output shape, parameter count,
// totals) with thousands separators.
std::string architecture_summary(Network& network);

std::string format_with_commas(std::int64_t value);

}  // namespace bcsnn
