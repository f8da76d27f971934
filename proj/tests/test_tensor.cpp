#include <cmath>
#include <stdexcept>

#include "bcsnn/tensor.hpp"
#include "doctest.h"

using bcsnn::Tensor;

TEST_SUITE("tensor") {

TEST_CASE("construction zero-fills and records the shape") {
  Tensor t({2, 3, 4});
  CHECK(t.rank() == 3);
  CHECK(t.dim(0) == 2);
  CHECK(t.dim(1) == 3);
  CHECK(t.dim(2) == 4);
  CHECK(t.size() == 24);
  for (std::int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0);

  Tensor filled({2, 2}, 1.5);
  for (std::int64_t i = 0; i < filled.size(); ++i) CHECK(filled[i] == 1.5);
}

TEST_CASE("default tensor is empty") {
  Tensor t;
  CHECK(t.empty());
  CHECK(t.rank() == 0);
  CHECK(t.size() == 0);
}

TEST_CASE("negative extents are rejected, zero extents give empty storage") {
  CHECK_THROWS_AS(Tensor({-1}), std::invalid_argument);
  CHECK(Tensor({2, 0}).empty());
}

TEST_CASE("fill overwrites every element") {
  Tensor t({3, 3});
  t.fill(2.25);
  for (std::int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == 2.25);
}

TEST_CASE("reshaped preserves storage order") {
  Tensor t({2, 3});
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  Tensor r = t.reshaped({3, 2});
  CHECK(r.rank() == 2);
  CHECK(r.dim(0) == 3);
  for (std::int64_t i = 0; i < r.size(); ++i) CHECK(r[i] == static_cast<double>(i));
  CHECK_THROWS_AS(t.reshaped({4, 2}), std::invalid_argument);
}

TEST_CASE("same_shape compares extents only") {
  Tensor a({2, 3});
  Tensor b({2, 3}, 7.0);
  Tensor c({3, 2});
  CHECK(a.same_shape(b));
  CHECK_FALSE(a.same_shape(c));
}

TEST_CASE("shape_numel and shape_to_string") {
  CHECK(bcsnn::shape_numel({2, 3, 4}) == 24);
  CHECK(bcsnn::shape_numel({}) == 1);  // empty product: a scalar
  CHECK(bcsnn::shape_to_string({2, 3}) == "[2, 3]");
  CHECK(bcsnn::shape_to_string({7}) == "[7]");
}

TEST_CASE("all_finite flags NaN and infinity") {
  Tensor t({4});
  CHECK(bcsnn::all_finite(t));
  t[2] = std::nan("");
  CHECK_FALSE(bcsnn::all_finite(t));
  t[2] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(bcsnn::all_finite(t));
}

}  // TEST_SUITE
