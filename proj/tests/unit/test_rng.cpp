#include <vector>

#include "doctest.h"
#include "hazmatch/rng.hpp"

using hazmatch::RngStream;

TEST_CASE("same seed reproduces the stream") {
  RngStream a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("child streams do not depend on parent consumption") {
  RngStream a(9), b(9);
  for (int i = 0; i < 57; ++i) a.next_u64();  // advance one parent only
  RngStream ca = a.child(4);
  RngStream cb = b.child(4);
  for (int i = 0; i < 20; ++i) CHECK(ca.next_u64() == cb.next_u64());
  CHECK(a.child_seed(4) == b.child_seed(4));
  CHECK(a.child_seed(4) != a.child_seed(5));
}

TEST_CASE("uniform01 range and coarse moments") {
  RngStream rng(7);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("exponential and bernoulli coarse moments") {
  RngStream rng(11);
  const int n = 200000;
  double esum = 0;
  int heads = 0;
  for (int i = 0; i < n; ++i) {
    esum += rng.exponential(4.0);
    heads += rng.bernoulli(0.3);
  }
  CHECK(esum / n == doctest::Approx(0.25).epsilon(0.02));
  CHECK(static_cast<double>(heads) / n == doctest::Approx(0.3).epsilon(0.02));
}

TEST_CASE("uniform_index covers the range uniformly") {
  RngStream rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.08));
}
