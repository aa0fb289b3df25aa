#include <doctest.h>

#include <cmath>
#include <limits>

#include "polyner/errors.hpp"
#include "polyner/tensor.hpp"

using polyner::Error;
using polyner::Tensor;

TEST_SUITE("tensor") {

TEST_CASE("row-major layout for rank 2") {
  Tensor t = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rank() == 2);
  CHECK(t.size() == 6);
  CHECK(t(0, 0) == 1);
  CHECK(t(0, 2) == 3);
  CHECK(t(1, 0) == 4);
  CHECK(t(1, 2) == 6);
  CHECK(t[5] == 6);
}

TEST_CASE("row-major layout for rank 3") {
  Tensor t = Tensor::from_values({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(t(0, 0, 0) == 1);
  CHECK(t(0, 1, 1) == 4);
  CHECK(t(1, 0, 0) == 5);
  CHECK(t(1, 1, 1) == 8);
}

TEST_CASE("factories") {
  Tensor z = Tensor::zeros({3, 2});
  CHECK(z.size() == 6);
  for (double v : z.flat()) CHECK(v == 0.0);

  Tensor f = Tensor::full({2, 2}, 0.25);
  for (double v : f.flat()) CHECK(v == 0.25);

  Tensor v = Tensor::vector({1.5, -2.0});
  CHECK(v.rank() == 1);
  CHECK(v.dim(0) == 2);
  CHECK(v[1] == -2.0);
}

TEST_CASE("from_values rejects a count mismatch") {
  CHECK_THROWS_AS((void)Tensor::from_values({2, 2}, {1, 2, 3}), Error);
}

TEST_CASE("fill and equality") {
  Tensor a = Tensor::zeros({2, 2});
  Tensor b = Tensor::zeros({2, 2});
  CHECK(a == b);
  a.fill(3.0);
  CHECK_FALSE(a == b);
  b.fill(3.0);
  CHECK(a == b);
  CHECK_FALSE(a == Tensor::zeros({4}));
}

TEST_CASE("all_finite flags nan and inf") {
  Tensor t = Tensor::zeros({2});
  CHECK(t.all_finite());
  t[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
  t[0] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("same_shape compares shapes only") {
  Tensor a = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::zeros({2, 2});
  CHECK(a.same_shape(b));
  CHECK_FALSE(a.same_shape(Tensor::zeros({2, 3})));
}

}  // TEST_SUITE
