#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bcsnn/tensor.hpp"

namespace bcsnn {

struct Sample {
  Tensor image;  // [3, H, W], values in [0, 1]
  int label = 0;
};

// In-memory dataset: equally sized 3-channel images in [0, 1] plus integer
// labels indexing class_names.
struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;
  std::string provenance;  // source directory, cache path, or synthetic seed

  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(samples.size()); }
};

struct SplitSpec {
  double train_fraction = 0.8;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  // fractions must be positive and sum to 1; throws std::invalid_argument
  void validate() const;
};

// Linear per-image rescale so min -> 0 and max -> 1; a constant image maps
// to all zeros. Idempotent on already-normalized data.
Tensor min_max_normalize(const Tensor& image);

// Bilinear resize of a [C, H, W] tensor to [C, out_h, out_w]; interpolation
// is convex, so outputs stay within the input range.
Tensor resize_bilinear(const Tensor& image, int out_h, int out_w);

// Rotation about the image center with bilinear resampling; pixels pulled
// from outside the source are 0.
Tensor rotate_bilinear(const Tensor& image, double degrees);

Tensor flip_horizontal(const Tensor& image);
Tensor flip_vertical(const Tensor& image);

// Loads a class-per-subdirectory image tree. Each image is min-max
// normalized, grayscale is replicated to 3 channels, and everything is
// resized to input_size x input_size. Unreadable files produce a warning on
// stderr and are skipped; a class directory with no readable image (or a
// root with no class directories) raises std::runtime_error.
Dataset load_image_dataset(const std::string& root, int input_size);

// Seeded shuffle followed by a fraction split (train count rounded down);
// the two parts are disjoint and exhaustive.
std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec);

// Expands the set to factor x its size: each original image plus factor-1
// transformed copies, each combining one uniform rotation in [-30, +30]
// degrees with independent 50% horizontal and vertical flips (rotation
// first). Labels are preserved. Throws std::invalid_argument for factor < 1.
Dataset augment(const Dataset& train_set, int factor, std::uint64_t seed);

// Deterministic synthetic stand-in with visually separable classes: filled
// disc / ring / bar, with position and size jitter plus pixel noise,
// normalized like loaded data. num_classes must be 2 or 3.
Dataset synthetic_dataset(int num_classes, int per_class, int image_size,
                          std::uint64_t seed);

// Parses "CxN" synthetic shorthand, e.g. "2x100" -> {2, 100}.
std::pair<int, int> parse_synthetic_spec(const std::string& text);

// Versioned binary dataset cache; round-trips bit-exactly.
void save_dataset_cache(const std::string& path, const Dataset& dataset);
Dataset load_dataset_cache(const std::string& path);

}  // namespace bcsnn
