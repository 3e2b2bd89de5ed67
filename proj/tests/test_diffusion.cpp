#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctm/diffusion.hpp"

using namespace ctm;

TEST_CASE("diffusion: preconditioning closed forms") {
  const double sd = 0.5;
  // at t == sigma_data the skip and residual paths split evenly
  Precond p = precondition(0.5, sd);
  CHECK(p.c_skip == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p.c_out == doctest::Approx(0.25 / std::sqrt(0.5)).epsilon(1e-15));
  CHECK(p.c_in == doctest::Approx(1.0 / std::sqrt(0.5)).epsilon(1e-15));
  CHECK(p.c_noise == doctest::Approx(0.25 * std::log(0.5)).epsilon(1e-15));

  Precond q = precondition(2.0, sd);
  CHECK(q.c_skip == doctest::Approx(0.25 / 4.25).epsilon(1e-15));
  CHECK(q.c_out == doctest::Approx(1.0 / std::sqrt(4.25)).epsilon(1e-15));

  CHECK_THROWS_AS(precondition(0.0, sd), std::invalid_argument);
  CHECK_THROWS_AS(precondition(-1.0, sd), std::invalid_argument);
}

TEST_CASE("diffusion: preconditioning identities hold across scales") {
  const double sd = 0.5;
  for (double t : {0.002, 0.05, 0.5, 3.0, 80.0}) {
    Precond p = precondition(t, sd);
    CHECK(p.c_in * p.c_in * (t * t + sd * sd) == doctest::Approx(1.0).epsilon(1e-12));
    // c_out^2 == sigma_data^2 (1 - c_skip)
    CHECK(p.c_out * p.c_out ==
          doctest::Approx(sd * sd * (1.0 - p.c_skip)).epsilon(1e-12));
  }
}

TEST_CASE("diffusion: karras grid endpoints and monotonicity") {
  Schedule s;
  KarrasGrid g = karras_grid(s, 40);
  REQUIRE(g.size() == 40);
  CHECK(g[0] == 80.0);  // pinned exactly
  CHECK(g[39] == 0.002);
  for (int i = 0; i + 1 < g.size(); ++i) CHECK(g[i] > g[i + 1]);
}

TEST_CASE("diffusion: karras warp closed forms") {
  // rho = 1, sigma_min = 0 is plain linear interpolation
  std::vector<double> lin = karras_points(0.0, 80.0, 1.0, 3);
  CHECK(lin[0] == 80.0);
  CHECK(lin[1] == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(lin[2] == 0.0);

  // frozen value for the reference parameters, computed from the formula
  // (80^(1/7) + 0.5 (0.002^(1/7) - 80^(1/7)))^7 at the midpoint of n = 3
  std::vector<double> mid = karras_points(0.002, 80.0, 7.0, 3);
  const double a = std::pow(80.0, 1.0 / 7.0), b = std::pow(0.002, 1.0 / 7.0);
  CHECK(mid[1] == doctest::Approx(std::pow(a + 0.5 * (b - a), 7.0)).epsilon(1e-12));
  CHECK(mid[1] == doctest::Approx(2.515218976147159).epsilon(1e-12));

  CHECK_THROWS_AS(karras_points(0.002, 80.0, 7.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(karras_points(80.0, 0.002, 7.0, 8), std::invalid_argument);
}

TEST_CASE("diffusion: lognormal time median and spread") {
  Rng r = Rng::from_seed(11);
  const int n = 100000;
  std::vector<double> xs(static_cast<std::size_t>(n));
  double mean_log = 0.0;
  for (double& x : xs) {
    x = lognormal_time(-1.2, 1.2, r);
    CHECK(x > 0.0);
    mean_log += std::log(x);
  }
  mean_log /= n;
  std::nth_element(xs.begin(), xs.begin() + n / 2, xs.end());
  CHECK(xs[static_cast<std::size_t>(n) / 2] ==
        doctest::Approx(std::exp(-1.2)).epsilon(0.03));
  CHECK(mean_log == doctest::Approx(-1.2).epsilon(0.02));
}

TEST_CASE("diffusion: grid-warped uniform time endpoints") {
  Schedule s;
  CHECK(karras_uniform_time(0.0, s) == doctest::Approx(80.0).epsilon(1e-12));
  CHECK(karras_uniform_time(1.0, s) == doctest::Approx(0.002).epsilon(1e-12));
  const double a = std::pow(80.0, 1.0 / 7.0), b = std::pow(0.002, 1.0 / 7.0);
  CHECK(karras_uniform_time(0.3, s) ==
        doctest::Approx(std::pow(a + 0.3 * (b - a), 7.0)).epsilon(1e-12));
  CHECK(karras_uniform_time(0.2, s) > karras_uniform_time(0.4, s));
}

TEST_CASE("diffusion: add_noise with explicit eps is exact") {
  Vec z0 = {1.0, -2.0, 0.5};
  Vec eps = {0.25, 0.5, -1.0};
  Vec zt = add_noise(z0, 3.0, eps);
  CHECK(zt[0] == 1.75);
  CHECK(zt[1] == -0.5);
  CHECK(zt[2] == -2.5);
}

TEST_CASE("diffusion: add_noise statistics") {
  Rng r = Rng::from_seed(12);
  Vec z0 = {2.0};
  const double t = 1.5;
  const int n = 100000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec zt = add_noise(z0, t, r);
    s1 += zt[0];
    s2 += (zt[0] - 2.0) * (zt[0] - 2.0);
  }
  CHECK(s1 / n == doctest::Approx(2.0).epsilon(0.01));
  CHECK(s2 / n == doctest::Approx(t * t).epsilon(0.02));
}

TEST_CASE("diffusion: codec is the identity") {
  LatentCodec codec;
  Vec x = {0.1, -0.2, 0.3};
  CHECK(codec.decode(codec.encode(x)) == x);
}

TEST_CASE("diffusion: schedule validation") {
  Schedule bad;
  bad.sigma_min = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  Schedule flipped;
  flipped.sigma_min = 81.0;
  CHECK_THROWS_AS(flipped.validate(), std::invalid_argument);
}
