#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "ctm/num.hpp"
#include "ctm/rng.hpp"

using namespace ctm;

TEST_CASE("rng: same seed replays the same stream") {
  Rng a = Rng::from_seed(42);
  Rng b = Rng::from_seed(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng::from_seed(42).next_u64() != Rng::from_seed(43).next_u64());
}

TEST_CASE("rng: fork leaves the parent untouched and separates streams") {
  Rng parent = Rng::from_seed(7);
  const std::uint64_t before = parent.counter;
  Rng c0 = parent.fork(0);
  Rng c1 = parent.fork(1);
  CHECK(parent.counter == before);
  CHECK(c0.key != c1.key);
  CHECK(c0.counter == 0);
  // forking twice with the same stream id gives the same child
  CHECK(parent.fork(5).next_u64() == parent.fork(5).next_u64());
  // children and parent produce distinct sequences
  std::set<std::uint64_t> vals;
  for (Rng* r : {&parent, &c0, &c1})
    for (int i = 0; i < 8; ++i) vals.insert(r->next_u64());
  CHECK(vals.size() == 24);
}

TEST_CASE("rng: resume from (key, counter) continues the stream") {
  Rng a = Rng::from_seed(99);
  for (int i = 0; i < 17; ++i) a.next_u64();
  Rng b(a.key, a.counter);
  for (int i = 0; i < 20; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng: uniform ranges") {
  Rng r = Rng::from_seed(1);
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double p = r.uniform_pos();
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
    const double x = r.uniform(-3.0, 5.0);
    CHECK(x >= -3.0);
    CHECK(x < 5.0);
  }
}

TEST_CASE("rng: uniform_int hits every residue and stays in range") {
  Rng r = Rng::from_seed(2);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const std::uint64_t k = r.uniform_int(7);
    REQUIRE(k < 7);
    ++hits[std::size_t(k)];
  }
  for (int h : hits) CHECK(h > 700);  // fair to ~30 percent
}

TEST_CASE("rng: normal moments") {
  Rng r = Rng::from_seed(3);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
  }
  CHECK(std::abs(s1 / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  CHECK(std::abs(s3 / n) < 0.05);
}

TEST_CASE("rng: logsumexp matches naive arithmetic and survives extremes") {
  Vec v = {0.1, -0.3, 1.7};
  double naive = std::log(std::exp(0.1) + std::exp(-0.3) + std::exp(1.7));
  CHECK(logsumexp(v) == doctest::Approx(naive).epsilon(1e-12));
  Vec big = {-1e308, -1e308, -1e308};
  CHECK(std::isfinite(logsumexp(big)));
  Vec mixed = {700.0, -700.0};
  CHECK(logsumexp(mixed) == doctest::Approx(700.0).epsilon(1e-12));
}
