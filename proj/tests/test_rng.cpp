#include <cmath>
#include <cstdint>
#include <vector>

#include "adadecay/rng.hpp"
#include "doctest.h"

using namespace adadecay;

TEST_CASE("identical seeds give identical streams") {
  RngState a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  RngState c(42), d(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(c.next_uniform() == d.next_uniform());
    CHECK(c.next_normal() == d.next_normal());
  }
}

TEST_CASE("different seeds give different streams") {
  RngState a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next_u64() == b.next_u64()) ++same;
  }
  CHECK(same == 0);
}

TEST_CASE("uniform samples lie in [0,1)") {
  RngState rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.next_uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal sample moments over one million draws") {
  RngState rng(42);
  const std::size_t n = 1000000;
  double sum = 0.0;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = rng.next_normal();
    sum += xs[i];
  }
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  CHECK(std::abs(mean) < 0.004);
  CHECK(std::abs(std::sqrt(var) - 1.0) < 0.005);
}

TEST_CASE("next_below stays in range and is deterministic") {
  RngState a(9), b(9);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t x = a.next_below(17);
    CHECK(x < 17);
    CHECK(x == b.next_below(17));
  }
  CHECK_THROWS(a.next_below(0));
}

TEST_CASE("derived streams are independent and reproducible") {
  RngState s0 = derive_stream(5, 0);
  RngState s1 = derive_stream(5, 1);
  RngState s0_again = derive_stream(5, 0);
  CHECK(s0.next_u64() == s0_again.next_u64());
  RngState a = derive_stream(5, 0);
  RngState b = derive_stream(5, 1);
  int same = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next_u64() == b.next_u64()) ++same;
  }
  CHECK(same == 0);
  (void)s1;
}
