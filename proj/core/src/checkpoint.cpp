#include "bcsnn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace bcsnn {

namespace {

constexpr char kMagic[8] = {'B', 'C', 'S', 'N', 'N', 'C', 'K', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& out, const void* data, std::size_t count) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(count));
}

void put_u32(std::ostream& out, std::uint32_t v) { put_bytes(out, &v, sizeof v); }
void put_i32(std::ostream& out, std::int32_t v) { put_bytes(out, &v, sizeof v); }
void put_u64(std::ostream& out, std::uint64_t v) { put_bytes(out, &v, sizeof v); }
void put_f64(std::ostream& out, double v) { put_bytes(out, &v, sizeof v); }

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, s.data(), s.size());
}

void get_bytes(std::istream& in, void* data, std::size_t count) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw std::runtime_error("checkpoint file is truncated");
  }
}

std::uint32_t get_u32(std::istream& in) { std::uint32_t v; get_bytes(in, &v, sizeof v); return v; }
std::int32_t get_i32(std::istream& in) { std::int32_t v; get_bytes(in, &v, sizeof v); return v; }
std::uint64_t get_u64(std::istream& in) { std::uint64_t v; get_bytes(in, &v, sizeof v); return v; }
double get_f64(std::istream& in) { double v; get_bytes(in, &v, sizeof v); return v; }

std::string get_string(std::istream& in) {
  const std::uint32_t len = get_u32(in);
  if (len > (1u << 20)) throw std::runtime_error("checkpoint file holds an implausible string length");
  std::string s(len, '\0');
  if (len > 0) get_bytes(in, s.data(), len);
  return s;
}

void put_int_vector(std::ostream& out, const std::vector<int>& v) {
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (int x : v) put_i32(out, x);
}

std::vector<int> get_int_vector(std::istream& in) {
  const std::uint32_t count = get_u32(in);
  if (count > (1u << 16)) throw std::runtime_error("checkpoint file holds an implausible vector length");
  std::vector<int> v(count);
  for (std::uint32_t i = 0; i < count; ++i) v[i] = get_i32(in);
  return v;
}

void put_double_vector(std::ostream& out, const std::vector<double>& v) {
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (double x : v) put_f64(out, x);
}

std::vector<double> get_double_vector(std::istream& in) {
  const std::uint32_t count = get_u32(in);
  if (count > (1u << 16)) throw std::runtime_error("checkpoint file holds an implausible vector length");
  std::vector<double> v(count);
  for (std::uint32_t i = 0; i < count; ++i) v[i] = get_f64(in);
  return v;
}

// Named tensors in network order: every parameter, then every buffer. Save
// and load walk this list the same way, so names line up positionally.
struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

std::vector<NamedTensor> state_tensors(Network& network) {
  std::vector<NamedTensor> out;
  for (ParamRef p : network.all_params()) out.push_back({p.name, p.value});
  for (BufferRef b : network.all_buffers()) out.push_back({b.name, b.value});
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, Network& network, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint file for writing: " + path);

  put_bytes(out, kMagic, sizeof kMagic);
  put_u32(out, kVersion);

  const ArchitectureSpec& a = meta.arch;
  put_i32(out, a.input_channels);
  put_i32(out, a.input_size);
  put_i32(out, a.conv_kernel);
  put_i32(out, a.pool);
  put_int_vector(out, a.conv_filters);
  put_int_vector(out, a.hidden_widths);
  put_double_vector(out, a.dropout_rates);
  put_i32(out, a.num_classes);
  put_f64(out, a.lif.beta);
  put_f64(out, a.lif.theta);
  put_f64(out, a.lif.slope_k);
  put_u64(out, a.init_seed);

  put_string(out, coding_mode_name(meta.coding));
  put_i32(out, meta.num_steps);
  put_u64(out, meta.seed);

  std::vector<NamedTensor> tensors = state_tensors(network);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& nt : tensors) {
    put_string(out, nt.name);
    put_int_vector(out, nt.tensor->shape());
    put_bytes(out, nt.tensor->data(), static_cast<std::size_t>(nt.tensor->size()) * sizeof(double));
  }
  out.flush();
  if (!out) throw std::runtime_error("failed while writing checkpoint file: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);

  char magic[sizeof kMagic];
  get_bytes(in, magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic bytes): " + path);
  }
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }

  CheckpointMeta meta;
  ArchitectureSpec& a = meta.arch;
  a.input_channels = get_i32(in);
  a.input_size = get_i32(in);
  a.conv_kernel = get_i32(in);
  a.pool = get_i32(in);
  a.conv_filters = get_int_vector(in);
  a.hidden_widths = get_int_vector(in);
  a.dropout_rates = get_double_vector(in);
  a.num_classes = get_i32(in);
  a.lif.beta = get_f64(in);
  a.lif.theta = get_f64(in);
  a.lif.slope_k = get_f64(in);
  a.init_seed = get_u64(in);

  meta.coding = coding_mode_from_name(get_string(in));
  meta.num_steps = get_i32(in);
  meta.seed = get_u64(in);

  LoadedCheckpoint loaded{meta, build_model(meta.arch)};
  std::vector<NamedTensor> tensors = state_tensors(loaded.network);

  const std::uint32_t count = get_u32(in);
  if (count != tensors.size()) {
    throw std::runtime_error("checkpoint does not match the stored architecture: holds " +
                             std::to_string(count) + " tensors, the rebuilt model has " +
                             std::to_string(tensors.size()));
  }
  for (NamedTensor& nt : tensors) {
    const std::string name = get_string(in);
    if (name != nt.name) {
      throw std::runtime_error("checkpoint tensor '" + name + "' does not match expected '" +
                               nt.name + "'");
    }
    const std::vector<int> shape = get_int_vector(in);
    if (shape != nt.tensor->shape()) {
      throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                               shape_to_string(shape) + ", the rebuilt model expects " +
                               shape_to_string(nt.tensor->shape()));
    }
    get_bytes(in, nt.tensor->data(),
              static_cast<std::size_t>(nt.tensor->size()) * sizeof(double));
  }
  return loaded;
}

}  // namespace bcsnn
