#include "bcsnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "bcsnn/image_io.hpp"
#include "bcsnn/rng.hpp"

namespace fs = std::filesystem;

namespace bcsnn {
namespace {

constexpr double kPi = 3.14159265358979323846;

void require_chw(const Tensor& image, const char* who) {
  if (image.rank() != 3) {
    throw std::invalid_argument(std::string(who) + ": expected a [C, H, W] image, got " +
                                shape_to_string(image.shape()));
  }
}

// bilinear read with zero outside the source raster
double sample_or_zero(const double* plane, int h, int w, double y, double x) {
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const double fy = y - y0;
  const double fx = x - x0;
  double acc = 0.0;
  for (int dy = 0; dy < 2; ++dy) {
    for (int dx = 0; dx < 2; ++dx) {
      const int yy = y0 + dy;
      const int xx = x0 + dx;
      if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
      const double wgt = (dy ? fy : 1.0 - fy) * (dx ? fx : 1.0 - fx);
      acc += wgt * plane[static_cast<std::int64_t>(yy) * w + xx];
    }
  }
  return acc;
}

Tensor tensor_from_u8(const ImageU8& img) {
  Tensor out({img.channels, img.height, img.width});
  const std::int64_t plane = static_cast<std::int64_t>(img.height) * img.width;
  for (std::int64_t p = 0; p < plane; ++p) {
    for (int c = 0; c < img.channels; ++c) {
      out[c * plane + p] = static_cast<double>(img.pixels[static_cast<size_t>(p) * img.channels + c]) / 255.0;
    }
  }
  return out;
}

Tensor replicate_to_three(const Tensor& image) {
  if (image.dim(0) == 3) return image;
  if (image.dim(0) != 1) {
    throw std::invalid_argument("expected 1 or 3 channels, got " +
                                std::to_string(image.dim(0)));
  }
  Tensor out({3, image.dim(1), image.dim(2)});
  const std::int64_t plane = static_cast<std::int64_t>(image.dim(1)) * image.dim(2);
  for (int c = 0; c < 3; ++c) {
    std::memcpy(out.data() + c * plane, image.data(), static_cast<size_t>(plane) * sizeof(double));
  }
  return out;
}

// binary cache plumbing
void write_bytes(std::ofstream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, size_t n, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw std::runtime_error(path + ": dataset cache truncated");
  }
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
  write_bytes(out, &v, sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T v;
  read_bytes(in, &v, sizeof(T), path);
  return v;
}

void write_string(std::ofstream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}

std::string read_string(std::ifstream& in, const std::string& path) {
  const auto len = read_pod<std::uint32_t>(in, path);
  if (len > (1u << 20)) throw std::runtime_error(path + ": dataset cache corrupt (string length)");
  std::string s(len, '\0');
  read_bytes(in, s.data(), len, path);
  return s;
}

constexpr char kCacheMagic[8] = {'B', 'C', 'S', 'N', 'N', 'D', 'S', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

}  // namespace

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0) || !(test_fraction > 0.0)) {
    throw std::invalid_argument("split: fractions must be positive");
  }
  if (std::abs(train_fraction + test_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument("split: fractions must sum to 1");
  }
}

Tensor min_max_normalize(const Tensor& image) {
  if (image.empty()) throw std::invalid_argument("min_max_normalize: empty image");
  double lo = image[0];
  double hi = image[0];
  for (std::int64_t i = 1; i < image.size(); ++i) {
    lo = std::min(lo, image[i]);
    hi = std::max(hi, image[i]);
  }
  Tensor out(image.shape());
  if (hi == lo) return out;  // constant image -> all zeros
  const double scale = 1.0 / (hi - lo);
  for (std::int64_t i = 0; i < image.size(); ++i) out[i] = (image[i] - lo) * scale;
  return out;
}

Tensor resize_bilinear(const Tensor& image, int out_h, int out_w) {
  require_chw(image, "resize_bilinear");
  if (out_h < 1 || out_w < 1) {
    throw std::invalid_argument("resize_bilinear: target size must be positive");
  }
  const int channels = image.dim(0);
  const int ih = image.dim(1);
  const int iw = image.dim(2);
  if (ih == out_h && iw == out_w) return image;
  Tensor out({channels, out_h, out_w});
  const double sy = static_cast<double>(ih) / out_h;
  const double sx = static_cast<double>(iw) / out_w;
  for (int c = 0; c < channels; ++c) {
    const double* src = image.data() + static_cast<std::int64_t>(c) * ih * iw;
    double* dst = out.data() + static_cast<std::int64_t>(c) * out_h * out_w;
    for (int r = 0; r < out_h; ++r) {
      // pixel-center mapping, clamped at the borders
      const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(ih - 1));
      for (int q = 0; q < out_w; ++q) {
        const double x = std::clamp((q + 0.5) * sx - 0.5, 0.0, static_cast<double>(iw - 1));
        dst[static_cast<std::int64_t>(r) * out_w + q] = sample_or_zero(src, ih, iw, y, x);
      }
    }
  }
  return out;
}

Tensor rotate_bilinear(const Tensor& image, double degrees) {
  require_chw(image, "rotate_bilinear");
  const int channels = image.dim(0);
  const int h = image.dim(1);
  const int w = image.dim(2);
  const double a = degrees * kPi / 180.0;
  const double cos_a = std::cos(a);
  const double sin_a = std::sin(a);
  const double cy = (h - 1) / 2.0;
  const double cx = (w - 1) / 2.0;
  Tensor out(image.shape());
  for (int c = 0; c < channels; ++c) {
    const double* src = image.data() + static_cast<std::int64_t>(c) * h * w;
    double* dst = out.data() + static_cast<std::int64_t>(c) * h * w;
    for (int r = 0; r < h; ++r) {
      for (int q = 0; q < w; ++q) {
        // inverse map: where did this output pixel come from?
        const double dy = r - cy;
        const double dx = q - cx;
        const double sy = cy + cos_a * dy + sin_a * dx;
        const double sx = cx - sin_a * dy + cos_a * dx;
        dst[static_cast<std::int64_t>(r) * w + q] = sample_or_zero(src, h, w, sy, sx);
      }
    }
  }
  return out;
}

Tensor flip_horizontal(const Tensor& image) {
  require_chw(image, "flip_horizontal");
  const int channels = image.dim(0);
  const int h = image.dim(1);
  const int w = image.dim(2);
  Tensor out(image.shape());
  for (int c = 0; c < channels; ++c) {
    for (int r = 0; r < h; ++r) {
      const double* src = image.data() + (static_cast<std::int64_t>(c) * h + r) * w;
      double* dst = out.data() + (static_cast<std::int64_t>(c) * h + r) * w;
      for (int q = 0; q < w; ++q) dst[q] = src[w - 1 - q];
    }
  }
  return out;
}

Tensor flip_vertical(const Tensor& image) {
  require_chw(image, "flip_vertical");
  const int channels = image.dim(0);
  const int h = image.dim(1);
  const int w = image.dim(2);
  Tensor out(image.shape());
  for (int c = 0; c < channels; ++c) {
    for (int r = 0; r < h; ++r) {
      const double* src = image.data() + (static_cast<std::int64_t>(c) * h + (h - 1 - r)) * w;
      double* dst = out.data() + (static_cast<std::int64_t>(c) * h + r) * w;
      std::memcpy(dst, src, static_cast<size_t>(w) * sizeof(double));
    }
  }
  return out;
}

Dataset load_image_dataset(const std::string& root, int input_size) {
  if (input_size < 1) throw std::invalid_argument("load_image_dataset: input_size must be >= 1");
  if (!fs::is_directory(root)) {
    throw std::runtime_error(root + ": not a directory");
  }
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) {
    throw std::runtime_error(root + ": no class subdirectories found");
  }

  Dataset dataset;
  dataset.provenance = root;
  for (const auto& dir : class_dirs) {
    const int label = static_cast<int>(dataset.class_names.size());
    dataset.class_names.push_back(dir.filename().string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::int64_t loaded = 0;
    for (const auto& file : files) {
      ImageU8 raw;
      try {
        raw = read_image(file.string());
      } catch (const std::exception& e) {
        std::cerr << "warning: skipping " << e.what() << "\n";
        continue;
      }
      Tensor image = min_max_normalize(tensor_from_u8(raw));
      image = replicate_to_three(image);
      image = resize_bilinear(image, input_size, input_size);
      dataset.samples.push_back({std::move(image), label});
      ++loaded;
    }
    if (loaded == 0) {
      throw std::runtime_error(dir.string() + ": class directory has no readable images");
    }
  }
  return dataset;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec) {
  spec.validate();
  const std::int64_t n = dataset.size();
  if (n == 0) throw std::invalid_argument("split: dataset is empty");
  std::vector<std::int64_t> order(static_cast<size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(spec.seed);
  rng.shuffle(order);
  // round the train count down; the 1e-9 nudge keeps exact products exact
  const auto train_count =
      static_cast<std::int64_t>(std::floor(static_cast<double>(n) * spec.train_fraction + 1e-9));
  Dataset train;
  Dataset test;
  train.class_names = dataset.class_names;
  test.class_names = dataset.class_names;
  train.provenance = dataset.provenance;
  test.provenance = dataset.provenance;
  train.samples.reserve(static_cast<size_t>(train_count));
  test.samples.reserve(static_cast<size_t>(n - train_count));
  for (std::int64_t i = 0; i < n; ++i) {
    const Sample& s = dataset.samples[static_cast<size_t>(order[static_cast<size_t>(i)])];
    (i < train_count ? train : test).samples.push_back(s);
  }
  return {std::move(train), std::move(test)};
}

Dataset augment(const Dataset& train_set, int factor, std::uint64_t seed) {
  if (factor < 1) throw std::invalid_argument("augment: factor must be >= 1");
  Dataset out;
  out.class_names = train_set.class_names;
  out.provenance = train_set.provenance;
  out.samples.reserve(train_set.samples.size() * static_cast<size_t>(factor));
  Rng rng(seed);
  for (const Sample& s : train_set.samples) {
    out.samples.push_back(s);
    for (int k = 1; k < factor; ++k) {
      const double angle = rng.uniform(-30.0, 30.0);
      Tensor image = rotate_bilinear(s.image, angle);
      if (rng.bernoulli(0.5)) image = flip_horizontal(image);
      if (rng.bernoulli(0.5)) image = flip_vertical(image);
      out.samples.push_back({std::move(image), s.label});
    }
  }
  return out;
}

Dataset synthetic_dataset(int num_classes, int per_class, int image_size,
                          std::uint64_t seed) {
  if (num_classes != 2 && num_classes != 3) {
    throw std::invalid_argument("synthetic_dataset: num_classes must be 2 or 3");
  }
  if (per_class < 1) throw std::invalid_argument("synthetic_dataset: per_class must be >= 1");
  if (image_size < 8) throw std::invalid_argument("synthetic_dataset: image_size must be >= 8");

  Dataset dataset;
  const std::vector<std::string> names = {"disc", "ring", "bar"};
  dataset.class_names.assign(names.begin(), names.begin() + num_classes);
  dataset.provenance = "synthetic:seed=" + std::to_string(seed);

  Rng rng(seed);
  const double s = static_cast<double>(image_size);
  const double edge = 1.2;  // soft shape boundary, in pixels
  auto soft = [edge](double d) { return std::clamp(d / edge, 0.0, 1.0); };

  for (int label = 0; label < num_classes; ++label) {
    for (int i = 0; i < per_class; ++i) {
      const double cx = s / 2.0 + rng.uniform(-s / 8.0, s / 8.0);
      const double cy = s / 2.0 + rng.uniform(-s / 8.0, s / 8.0);
      const double scale = rng.uniform(0.85, 1.15);
      const double amp = rng.uniform(0.7, 1.0);
      const double bar_angle = rng.uniform(0.0, kPi);

      Tensor gray({1, image_size, image_size});
      for (int r = 0; r < image_size; ++r) {
        for (int q = 0; q < image_size; ++q) {
          const double dy = r - cy;
          const double dx = q - cx;
          const double dist = std::hypot(dx, dy);
          double v = 0.0;
          if (label == 0) {  // filled disc
            v = soft(scale * 0.28 * s - dist);
          } else if (label == 1) {  // ring
            const double outer = scale * 0.30 * s;
            const double inner = scale * 0.17 * s;
            v = soft(outer - dist) * soft(dist - inner);
          } else {  // bar
            const double along = std::cos(bar_angle) * dx + std::sin(bar_angle) * dy;
            const double across = -std::sin(bar_angle) * dx + std::cos(bar_angle) * dy;
            v = soft(scale * 0.40 * s - std::abs(along)) *
                soft(scale * 0.07 * s - std::abs(across));
          }
          v = amp * v + rng.uniform(-0.08, 0.08);
          gray[static_cast<std::int64_t>(r) * image_size + q] = std::clamp(v, 0.0, 1.0);
        }
      }
      Tensor image = replicate_to_three(min_max_normalize(gray));
      dataset.samples.push_back({std::move(image), label});
    }
  }
  return dataset;
}

std::pair<int, int> parse_synthetic_spec(const std::string& text) {
  const size_t x = text.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= text.size()) {
    throw std::invalid_argument("synthetic spec must look like CxN (e.g. 2x100), got \"" +
                                text + "\"");
  }
  int classes = 0;
  int per_class = 0;
  try {
    size_t used = 0;
    classes = std::stoi(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("");
    per_class = std::stoi(text.substr(x + 1), &used);
    if (used != text.size() - x - 1) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw std::invalid_argument("synthetic spec must look like CxN (e.g. 2x100), got \"" +
                                text + "\"");
  }
  return {classes, per_class};
}

void save_dataset_cache(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  write_bytes(out, kCacheMagic, sizeof(kCacheMagic));
  write_pod<std::uint32_t>(out, kCacheVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.class_names.size()));
  for (const auto& name : dataset.class_names) write_string(out, name);
  write_string(out, dataset.provenance);
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(dataset.samples.size()));
  for (const Sample& s : dataset.samples) {
    write_pod<std::int32_t>(out, s.label);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.image.rank()));
    for (int d : s.image.shape()) write_pod<std::int32_t>(out, d);
    write_bytes(out, s.image.data(), static_cast<size_t>(s.image.size()) * sizeof(double));
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

Dataset load_dataset_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  char magic[sizeof(kCacheMagic)];
  read_bytes(in, magic, sizeof(magic), path);
  if (std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) {
    throw std::runtime_error(path + ": not a dataset cache file");
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kCacheVersion) {
    throw std::runtime_error(path + ": unsupported dataset cache version " +
                             std::to_string(version));
  }
  Dataset dataset;
  const auto num_classes = read_pod<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < num_classes; ++i) {
    dataset.class_names.push_back(read_string(in, path));
  }
  dataset.provenance = read_string(in, path);
  const auto count = read_pod<std::uint64_t>(in, path);
  dataset.samples.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Sample s;
    s.label = read_pod<std::int32_t>(in, path);
    if (s.label < 0 || static_cast<std::uint32_t>(s.label) >= num_classes) {
      throw std::runtime_error(path + ": dataset cache corrupt (label out of range)");
    }
    const auto rank = read_pod<std::uint32_t>(in, path);
    if (rank != 3) throw std::runtime_error(path + ": dataset cache corrupt (image rank)");
    std::vector<int> shape(rank);
    for (auto& d : shape) {
      d = read_pod<std::int32_t>(in, path);
      if (d < 1 || d > (1 << 16)) {
        throw std::runtime_error(path + ": dataset cache corrupt (image extent)");
      }
    }
    s.image = Tensor(shape);
    read_bytes(in, s.image.data(), static_cast<size_t>(s.image.size()) * sizeof(double), path);
    dataset.samples.push_back(std::move(s));
  }
  return dataset;
}

}  // namespace bcsnn
