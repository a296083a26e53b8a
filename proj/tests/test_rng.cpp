#include <doctest.h>

#include "bream/rng.hpp"

using namespace bream;

TEST_CASE("same seed gives identical draws") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform stays in [0,1)") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("derived streams differ from each other and the master") {
  Rng a = Rng::derive(123, 0);
  Rng b = Rng::derive(123, 1);
  Rng c = Rng::derive(124, 0);
  CHECK(a.next_u64() != b.next_u64());
  CHECK(Rng::derive(123, 0).next_u64() != c.next_u64());
}

TEST_CASE("derive is deterministic") {
  CHECK(Rng::derive(9, 9).next_u64() == Rng::derive(9, 9).next_u64());
}
