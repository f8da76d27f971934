#include "bcsnn/model.hpp"

#include <memory>
#include <sstream>
#include <stdexcept>

#include "bcsnn/layers.hpp"

namespace bcsnn {

void ArchitectureSpec::validate() const {
  if (input_channels < 1) throw std::invalid_argument("architecture: input_channels must be >= 1");
  if (input_size < 1) throw std::invalid_argument("architecture: input_size must be >= 1");
  if (conv_kernel < 1) throw std::invalid_argument("architecture: conv_kernel must be >= 1");
  if (pool < 1) throw std::invalid_argument("architecture: pool must be >= 1");
  if (conv_filters.empty()) throw std::invalid_argument("architecture: at least one conv block required");
  if (hidden_widths.empty()) throw std::invalid_argument("architecture: at least one hidden linear block required");
  for (int f : conv_filters) {
    if (f < 1) throw std::invalid_argument("architecture: conv filter counts must be >= 1");
  }
  for (int w : hidden_widths) {
    if (w < 1) throw std::invalid_argument("architecture: hidden widths must be >= 1");
  }
  if (dropout_rates.size() != hidden_widths.size()) {
    throw std::invalid_argument("architecture: need one dropout rate per hidden block (" +
                                std::to_string(hidden_widths.size()) + " blocks, " +
                                std::to_string(dropout_rates.size()) + " rates)");
  }
  for (double r : dropout_rates) {
    if (!(r >= 0.0 && r < 1.0)) {
      throw std::invalid_argument("architecture: dropout rates must lie in [0, 1)");
    }
  }
  if (num_classes < 2) throw std::invalid_argument("architecture: num_classes must be >= 2");
  lif.validate();
  flatten_width();  // throws when the spatial chain collapses
}

int ArchitectureSpec::flatten_width() const {
  int spatial = input_size;
  for (size_t i = 0; i < conv_filters.size(); ++i) {
    const int after_conv = spatial - conv_kernel + 1;
    if (after_conv < pool) {
      throw std::invalid_argument(
          "architecture: input size " + std::to_string(input_size) + " collapses at conv block " +
          std::to_string(i + 1) + " (spatial " + std::to_string(spatial) + " -> " +
          std::to_string(after_conv) + " with pool " + std::to_string(pool) + ")");
    }
    spatial = after_conv / pool;
  }
  return conv_filters.back() * spatial * spatial;
}

ArchitectureSpec paper_architecture(int num_classes) {
  ArchitectureSpec spec;
  spec.input_channels = 3;
  spec.input_size = 128;
  spec.conv_filters = {64, 128, 256, 512};
  spec.hidden_widths = {4096, 128, 64, 32};
  spec.dropout_rates = {0.5, 0.3, 0.2, 0.2};
  spec.num_classes = num_classes;
  return spec;
}

ArchitectureSpec desk_architecture(int num_classes) {
  ArchitectureSpec spec;
  spec.input_size = 32;
  spec.conv_filters = {8, 16};
  spec.hidden_widths = {64};
  spec.dropout_rates = {0.2};
  spec.num_classes = num_classes;
  return spec;
}

ArchitectureSpec gradcheck_architecture(int num_classes) {
  ArchitectureSpec spec;
  spec.input_size = 16;
  spec.conv_filters = {4, 6};
  spec.hidden_widths = {16};
  spec.dropout_rates = {0.0};
  spec.num_classes = num_classes;
  return spec;
}

Network build_model(const ArchitectureSpec& spec) {
  spec.validate();
  Network net;
  net.set_input_shape({spec.input_channels, spec.input_size, spec.input_size});
  int in_channels = spec.input_channels;
  for (int filters : spec.conv_filters) {
    net.add(std::make_unique<Conv2d>(in_channels, filters, spec.conv_kernel));
    net.add(std::make_unique<BatchNorm>(BatchNorm::Dim::k2d, filters));
    net.add(std::make_unique<LifLayer>(spec.lif));
    net.add(std::make_unique<MaxPool2d>(spec.pool));
    in_channels = filters;
  }
  net.add(std::make_unique<Flatten>());
  int in_features = net.output_shape()[0];
  for (size_t i = 0; i < spec.hidden_widths.size(); ++i) {
    const int width = spec.hidden_widths[i];
    net.add(std::make_unique<Linear>(in_features, width));
    net.add(std::make_unique<BatchNorm>(BatchNorm::Dim::k1d, width));
    net.add(std::make_unique<LifLayer>(spec.lif));
    net.add(std::make_unique<Dropout>(spec.dropout_rates[i]));
    in_features = width;
  }
  net.add(std::make_unique<Linear>(in_features, spec.num_classes));
  net.add(std::make_unique<BatchNorm>(BatchNorm::Dim::k1d, spec.num_classes));
  net.add(std::make_unique<LifLayer>(spec.lif));
  net.init_params(spec.init_seed);
  return net;
}

Network build_paper_model(int num_classes) {
  if (num_classes != 2 && num_classes != 3) {
    throw std::invalid_argument("build_paper_model: num_classes must be 2 or 3, got " +
                                std::to_string(num_classes));
  }
  return build_model(paper_architecture(num_classes));
}

Network build_desk_model(const ArchitectureSpec& spec) { return build_model(spec); }

std::vector<SummaryRow> summary_rows(Network& network) {
  std::vector<SummaryRow> rows;
  rows.reserve(static_cast<size_t>(network.num_layers()));
  for (int i = 0; i < network.num_layers(); ++i) {
    Layer& layer = network.layer(i);
    const auto& shape = network.output_shape(i);
    std::ostringstream os;
    if (i == network.num_layers() - 1) {
      // the output lif layer yields both spikes and membrane potentials
      os << "[[-1";
      for (int d : shape) os << ", " << d;
      os << "], [-1";
      for (int d : shape) os << ", " << d;
      os << "]]";
    } else {
      os << "[-1";
      for (int d : shape) os << ", " << d;
      os << "]";
    }
    rows.push_back({layer.name(), os.str(), layer.num_params()});
  }
  return rows;
}

std::string format_with_commas(std::int64_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  const size_t first = digits[0] == '-' ? 1 : 0;
  for (size_t i = 0; i < digits.size(); ++i) {
    if (i > first && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string architecture_summary(Network& network) {
  const auto rows = summary_rows(network);
  std::ostringstream os;
  const std::string thin(64, '-');
  const std::string thick(64, '=');
  char line[128];
  os << thin << "\n";
  std::snprintf(line, sizeof(line), "%20s %26s %16s", "Layer (type)", "Output Shape", "Param #");
  os << line << "\n" << thick << "\n";
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line), "%20s %26s %16s", row.layer.c_str(),
                  row.output_shape.c_str(), format_with_commas(row.param_count).c_str());
    os << line << "\n";
  }
  os << thick << "\n";
  os << "Total params: " << format_with_commas(network.num_params()) << "\n";
  os << "Trainable params: " << format_with_commas(network.num_params()) << "\n";
  os << "Non-trainable params: 0\n";
  os << thin << "\n";
  return os.str();
}

}  // namespace bcsnn
