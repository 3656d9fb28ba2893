#include <limits>
#include <vector>

#include "adadecay/tensor.hpp"
#include "doctest.h"

using namespace adadecay;

TEST_CASE("shape counts elements and validates axes") {
  CHECK(Shape{4}.count() == 4);
  CHECK(Shape{2, 3}.count() == 6);
  CHECK((Shape{2, 3, 4, 5}).count() == 120);
  CHECK(Shape{2, 3}.rank() == 2);
  CHECK(Shape{2, 3}[1] == 3);
  CHECK(Shape{}.rank() == 0);  // default: the empty shape behind Tensor()
  CHECK_THROWS(Shape(std::vector<std::size_t>{}));
  CHECK_THROWS(Shape{1, 2, 3, 4, 5});
  CHECK_THROWS(Shape{0});
  CHECK_THROWS(Shape{2, 0, 3});
}

TEST_CASE("tensor construction") {
  Tensor z(Shape{2, 2});
  CHECK(z.size() == 4);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0);

  Tensor v(Shape{2}, {1.5, -2.5});
  CHECK(v[0] == 1.5);
  CHECK(v[1] == -2.5);
  CHECK_THROWS(Tensor(Shape{3}, {1.0, 2.0}));
}

TEST_CASE("reshape preserves storage") {
  Tensor t(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r = t.reshaped(Shape{3, 2});
  CHECK(r.shape() == Shape{3, 2});
  for (std::size_t i = 0; i < 6; ++i) CHECK(r[i] == t[i]);
  CHECK_THROWS(t.reshaped(Shape{4}));
}

TEST_CASE("fill and finiteness") {
  Tensor t(Shape{3});
  t.fill(2.0);
  CHECK(t.values() == std::vector<double>{2.0, 2.0, 2.0});
  CHECK(t.all_finite());
  t[1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
}
