#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bcsnn/data.hpp"
#include "bcsnn/image_io.hpp"
#include "bcsnn/rng.hpp"
#include "doctest.h"

using bcsnn::Dataset;
using bcsnn::Sample;
using bcsnn::SplitSpec;
using bcsnn::Tensor;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() /
               ("bcsnn_data_" + name + "_" + std::to_string(static_cast<long>(::getpid())));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Tensor filled_image(int size, double value) {
  Tensor image({3, size, size});
  image.fill(value);
  return image;
}

Tensor ramp_image(int size) {
  Tensor image({3, size, size});
  for (std::int64_t i = 0; i < image.size(); ++i) {
    image[i] = static_cast<double>(i) / static_cast<double>(image.size() - 1);
  }
  return image;
}

Dataset tiny_dataset(int per_class, int size) {
  Dataset set;
  set.class_names = {"a", "b"};
  bcsnn::Rng rng(7);
  for (int label = 0; label < 2; ++label) {
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.image = Tensor({3, size, size});
      for (std::int64_t k = 0; k < s.image.size(); ++k) s.image[k] = rng.uniform(0.0, 1.0);
      s.label = label;
      set.samples.push_back(std::move(s));
    }
  }
  return set;
}

bool tensors_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("min_max_normalize maps the range onto [0, 1]") {
  Tensor image({1, 2, 2});
  image[0] = 2.0;
  image[1] = 4.0;
  image[2] = 6.0;
  image[3] = 10.0;
  const Tensor out = bcsnn::min_max_normalize(image);
  CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(out[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out[3] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("min_max_normalize sends constant images to zero") {
  const Tensor out = bcsnn::min_max_normalize(filled_image(3, 0.7));
  for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("min_max_normalize is idempotent") {
  const Tensor once = bcsnn::min_max_normalize(ramp_image(4));
  const Tensor twice = bcsnn::min_max_normalize(once);
  for (std::int64_t i = 0; i < once.size(); ++i) {
    CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-12));
  }
}

TEST_CASE("resize to the same size is the identity") {
  const Tensor image = ramp_image(5);
  const Tensor out = bcsnn::resize_bilinear(image, 5, 5);
  for (std::int64_t i = 0; i < image.size(); ++i) {
    CHECK(out[i] == doctest::Approx(image[i]).epsilon(1e-12));
  }
}

TEST_CASE("bilinear downsample of a 2x2 block averages it") {
  Tensor image({1, 2, 2});
  image[0] = 1.0;
  image[1] = 2.0;
  image[2] = 1.0;
  image[3] = 2.0;
  const Tensor out = bcsnn::resize_bilinear(image, 1, 1);
  CHECK(out.shape() == std::vector<int>{1, 1, 1});
  CHECK(out[0] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("resize output stays inside the input range") {
  const Tensor image = ramp_image(9);
  for (const int target : {4, 7, 13}) {
    const Tensor out = bcsnn::resize_bilinear(image, target, target);
    for (std::int64_t i = 0; i < out.size(); ++i) {
      CHECK(out[i] >= 0.0);
      CHECK(out[i] <= 1.0);
    }
  }
}

TEST_CASE("zero-degree rotation is the identity") {
  const Tensor image = ramp_image(6);
  const Tensor out = bcsnn::rotate_bilinear(image, 0.0);
  for (std::int64_t i = 0; i < image.size(); ++i) {
    CHECK(out[i] == doctest::Approx(image[i]).epsilon(1e-12));
  }
}

TEST_CASE("rotation keeps pixel values within [0, 1]") {
  const Tensor image = ramp_image(8);
  for (const double degrees : {-30.0, -12.5, 17.0, 30.0}) {
    const Tensor out = bcsnn::rotate_bilinear(image, degrees);
    CHECK(out.shape() == image.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) {
      CHECK(out[i] >= 0.0);
      CHECK(out[i] <= 1.0);
    }
  }
}

TEST_CASE("flips are involutions and mirror single pixels") {
  Tensor image({1, 2, 3});
  for (std::int64_t i = 0; i < image.size(); ++i) image[i] = static_cast<double>(i);

  const Tensor h = bcsnn::flip_horizontal(image);
  // row 0 = {0, 1, 2} becomes {2, 1, 0}
  CHECK(h[0] == 2.0);
  CHECK(h[1] == 1.0);
  CHECK(h[2] == 0.0);
  CHECK(tensors_equal(bcsnn::flip_horizontal(h), image));

  const Tensor v = bcsnn::flip_vertical(image);
  // column 0 = {0, 3} becomes {3, 0}
  CHECK(v[0] == 3.0);
  CHECK(v[3] == 0.0);
  CHECK(tensors_equal(bcsnn::flip_vertical(v), image));
}

TEST_CASE("split produces disjoint exhaustive deterministic parts") {
  const Dataset set = tiny_dataset(125, 8);  // 250 samples
  SplitSpec spec;
  spec.train_fraction = 0.8;
  spec.test_fraction = 0.2;
  spec.seed = 99;
  const auto [train_a, test_a] = bcsnn::split(set, spec);
  CHECK(train_a.size() == 200);
  CHECK(test_a.size() == 50);
  CHECK(train_a.class_names == set.class_names);
  CHECK(test_a.class_names == set.class_names);

  // fingerprint each sample by its first pixel; input pixels are unique with
  // overwhelming probability under the uniform draw
  std::set<double> seen;
  for (const auto& s : train_a.samples) seen.insert(s.image[0]);
  for (const auto& s : test_a.samples) seen.insert(s.image[0]);
  CHECK(seen.size() == 250);

  const auto [train_b, test_b] = bcsnn::split(set, spec);
  REQUIRE(train_b.size() == train_a.size());
  for (std::int64_t i = 0; i < train_a.size(); ++i) {
    CHECK(train_a.samples[static_cast<std::size_t>(i)].label ==
          train_b.samples[static_cast<std::size_t>(i)].label);
    CHECK(tensors_equal(train_a.samples[static_cast<std::size_t>(i)].image,
                        train_b.samples[static_cast<std::size_t>(i)].image));
  }

  spec.seed = 100;
  const auto [train_c, test_c] = bcsnn::split(set, spec);
  bool any_difference = false;
  for (std::int64_t i = 0; i < train_a.size() && !any_difference; ++i) {
    any_difference = train_a.samples[static_cast<std::size_t>(i)].image[0] !=
                     train_c.samples[static_cast<std::size_t>(i)].image[0];
  }
  CHECK(any_difference);
}

TEST_CASE("split spec validation") {
  SplitSpec spec;
  spec.train_fraction = 0.7;
  spec.test_fraction = 0.2;  // does not sum to 1
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.train_fraction = 0.0;
  spec.test_fraction = 1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.train_fraction = 0.8;
  spec.test_fraction = 0.2;
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("augment multiplies the set and keeps originals") {
  Dataset set = tiny_dataset(11, 8);
  set.samples.resize(21);  // truncate to an odd count with unequal class sizes
  const Dataset out = bcsnn::augment(set, 5, 1234);
  CHECK(out.size() == 105);
  CHECK(out.class_names == set.class_names);

  // each original appears unmodified, and every copy keeps its label
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    bool found = false;
    for (const auto& candidate : out.samples) {
      if (candidate.label == set.samples[i].label &&
          tensors_equal(candidate.image, set.samples[i].image)) {
        found = true;
        break;
      }
    }
    CAPTURE(i);
    CHECK(found);
  }

  for (const auto& s : out.samples) {
    for (std::int64_t k = 0; k < s.image.size(); ++k) {
      CHECK(s.image[k] >= 0.0);
      CHECK(s.image[k] <= 1.0);
    }
  }

  // factor 1 is a pass-through; invalid factors are rejected
  CHECK(bcsnn::augment(set, 1, 5).size() == set.size());
  CHECK_THROWS_AS(bcsnn::augment(set, 0, 5), std::invalid_argument);
}

TEST_CASE("augment is seed-deterministic") {
  const Dataset set = tiny_dataset(6, 8);
  const Dataset a = bcsnn::augment(set, 3, 77);
  const Dataset b = bcsnn::augment(set, 3, 77);
  REQUIRE(a.size() == b.size());
  for (std::int64_t i = 0; i < a.size(); ++i) {
    CHECK(tensors_equal(a.samples[static_cast<std::size_t>(i)].image,
                        b.samples[static_cast<std::size_t>(i)].image));
  }
}

TEST_CASE("synthetic datasets are balanced, bounded, and deterministic") {
  const Dataset set = bcsnn::synthetic_dataset(3, 20, 24, 42);
  CHECK(set.size() == 60);
  CHECK(set.num_classes() == 3);
  std::vector<int> counts(3, 0);
  for (const auto& s : set.samples) {
    REQUIRE(s.label >= 0);
    REQUIRE(s.label < 3);
    ++counts[static_cast<std::size_t>(s.label)];
    CHECK(s.image.shape() == std::vector<int>{3, 24, 24});
    for (std::int64_t k = 0; k < s.image.size(); ++k) {
      CHECK(s.image[k] >= 0.0);
      CHECK(s.image[k] <= 1.0);
    }
  }
  CHECK(counts == std::vector<int>{20, 20, 20});

  const Dataset again = bcsnn::synthetic_dataset(3, 20, 24, 42);
  for (std::int64_t i = 0; i < set.size(); ++i) {
    CHECK(tensors_equal(set.samples[static_cast<std::size_t>(i)].image,
                        again.samples[static_cast<std::size_t>(i)].image));
  }

  const Dataset other_seed = bcsnn::synthetic_dataset(3, 20, 24, 43);
  CHECK_FALSE(tensors_equal(set.samples[0].image, other_seed.samples[0].image));

  CHECK_THROWS_AS(bcsnn::synthetic_dataset(1, 5, 24, 0), std::invalid_argument);
  CHECK_THROWS_AS(bcsnn::synthetic_dataset(4, 5, 24, 0), std::invalid_argument);
  CHECK_THROWS_AS(bcsnn::synthetic_dataset(2, 0, 24, 0), std::invalid_argument);
}

TEST_CASE("synthetic spec shorthand parses CxN") {
  CHECK(bcsnn::parse_synthetic_spec("2x100") == std::pair<int, int>{2, 100});
  CHECK(bcsnn::parse_synthetic_spec("3x525") == std::pair<int, int>{3, 525});
  CHECK_THROWS_AS(bcsnn::parse_synthetic_spec("2x"), std::invalid_argument);
  CHECK_THROWS_AS(bcsnn::parse_synthetic_spec("x100"), std::invalid_argument);
  CHECK_THROWS_AS(bcsnn::parse_synthetic_spec("banana"), std::invalid_argument);
  CHECK_THROWS_AS(bcsnn::parse_synthetic_spec("2x100x3"), std::invalid_argument);
}

TEST_CASE("dataset cache round-trips bit-exactly") {
  const fs::path dir = temp_dir("cache");
  const fs::path path = dir / "set.bcsnnds";
  const Dataset set = bcsnn::synthetic_dataset(2, 5, 16, 11);
  bcsnn::save_dataset_cache(path.string(), set);

  const Dataset loaded = bcsnn::load_dataset_cache(path.string());
  CHECK(loaded.class_names == set.class_names);
  REQUIRE(loaded.size() == set.size());
  for (std::int64_t i = 0; i < set.size(); ++i) {
    CHECK(loaded.samples[static_cast<std::size_t>(i)].label ==
          set.samples[static_cast<std::size_t>(i)].label);
    CHECK(tensors_equal(loaded.samples[static_cast<std::size_t>(i)].image,
                        set.samples[static_cast<std::size_t>(i)].image));
  }
}

TEST_CASE("dataset cache rejects corrupted files") {
  const fs::path dir = temp_dir("badcache");
  const fs::path good = dir / "good.bcsnnds";
  bcsnn::save_dataset_cache(good.string(), bcsnn::synthetic_dataset(2, 3, 16, 1));

  // truncation
  std::ifstream in(good, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const fs::path truncated = dir / "truncated.bcsnnds";
  {
    std::ofstream out(truncated, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(bcsnn::load_dataset_cache(truncated.string()), std::runtime_error);

  // wrong magic
  const fs::path garbled = dir / "garbled.bcsnnds";
  {
    std::string copy = bytes;
    copy[0] = 'X';
    std::ofstream out(garbled, std::ios::binary);
    out.write(copy.data(), static_cast<std::streamsize>(copy.size()));
  }
  CHECK_THROWS_AS(bcsnn::load_dataset_cache(garbled.string()), std::runtime_error);

  CHECK_THROWS_AS(bcsnn::load_dataset_cache((dir / "missing.bcsnnds").string()),
                  std::runtime_error);
}

TEST_CASE("image directory loading walks class subdirectories") {
  const fs::path root = temp_dir("tree");
  fs::create_directories(root / "cats");
  fs::create_directories(root / "dogs");

  auto write_image = [](const fs::path& path, unsigned char base) {
    bcsnn::ImageU8 image;
    image.width = 6;
    image.height = 6;
    image.channels = 3;
    image.pixels.resize(6 * 6 * 3);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
      image.pixels[i] = static_cast<unsigned char>((base + i * 5) % 256);
    }
    bcsnn::write_png(path.string(), image);
  };
  write_image(root / "cats" / "c1.png", 10);
  write_image(root / "cats" / "c2.png", 40);
  write_image(root / "dogs" / "d1.png", 90);

  // grayscale source: must be replicated across channels
  bcsnn::ImageU8 gray;
  gray.width = 5;
  gray.height = 5;
  gray.channels = 1;
  gray.pixels.resize(25);
  for (std::size_t i = 0; i < 25; ++i) gray.pixels[i] = static_cast<unsigned char>(i * 10);
  bcsnn::write_png((root / "dogs" / "d2.png").string(), gray);

  // unreadable file: warned about and skipped
  {
    std::ofstream junk(root / "cats" / "broken.png", std::ios::binary);
    junk << "not a png";
  }

  const Dataset set = bcsnn::load_image_dataset(root.string(), 8);
  CHECK(set.class_names == std::vector<std::string>{"cats", "dogs"});
  CHECK(set.size() == 4);
  int cats = 0;
  int dogs = 0;
  for (const auto& s : set.samples) {
    CHECK(s.image.shape() == std::vector<int>{3, 8, 8});
    for (std::int64_t k = 0; k < s.image.size(); ++k) {
      CHECK(s.image[k] >= 0.0);
      CHECK(s.image[k] <= 1.0);
    }
    (s.label == 0 ? cats : dogs) += 1;
  }
  CHECK(cats == 2);
  CHECK(dogs == 2);

  // a grayscale sample is channel-replicated: channels identical after load
  bool found_replicated = false;
  for (const auto& s : set.samples) {
    if (s.label != 1) continue;
    const std::int64_t plane = s.image.size() / 3;
    bool identical = true;
    for (std::int64_t k = 0; k < plane && identical; ++k) {
      identical = s.image[k] == s.image[plane + k] && s.image[k] == s.image[2 * plane + k];
    }
    found_replicated = found_replicated || identical;
  }
  CHECK(found_replicated);
}

TEST_CASE("image directory loading rejects unusable trees") {
  const fs::path empty_root = temp_dir("empty");
  CHECK_THROWS_AS(bcsnn::load_image_dataset(empty_root.string(), 8), std::runtime_error);

  const fs::path bad_class = temp_dir("badclass");
  fs::create_directories(bad_class / "only");
  {
    std::ofstream junk(bad_class / "only" / "nope.png", std::ios::binary);
    junk << "garbage";
  }
  CHECK_THROWS_AS(bcsnn::load_image_dataset(bad_class.string(), 8), std::runtime_error);

  CHECK_THROWS_AS(bcsnn::load_image_dataset((empty_root / "missing").string(), 8),
                  std::runtime_error);
}

}  // TEST_SUITE
